#pragma once

#include "jawgrasp/geometry.hpp"

#include <cstddef>
#include <vector>

namespace jawgrasp {

/// Point set in meters. `normals` is either empty or parallel to `points`.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  bool has_normals() const noexcept { return !normals.empty(); }

  /// Throws InvalidArgument unless normals are absent or unit-length and count-matched.
  void validate() const;

  PointCloud transformed(const RigidTransform& t) const;
  PointCloud subset(const std::vector<std::size_t>& indices) const;
  void append(const PointCloud& other);
};

}  // namespace jawgrasp
