#pragma once

#include "jawgrasp/cloud.hpp"
#include "jawgrasp/geometry.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace jawgrasp {

using Face = std::array<std::uint32_t, 3>;

/// Triangle surface with counter-clockwise (outward) winding.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  bool empty() const noexcept { return faces.empty(); }

  /// Index range and non-degeneracy check; throws on violation.
  void validate() const;

  /// True when every undirected edge is shared by exactly two faces, in
  /// opposite directions.
  bool is_watertight() const;
};

/// Outward unit normal of `face`. Throws DegenerateFace when the cross
/// product norm is below 1e-12.
Vec3 face_normal(const TriMesh& mesh, std::size_t face);

double face_area(const TriMesh& mesh, std::size_t face);
double surface_area(const TriMesh& mesh);
Vec3 bounding_box_center(const TriMesh& mesh);

/// Area-weighted uniform samples; each point carries its face's outward normal.
PointCloud sample_surface(const TriMesh& mesh, std::size_t count, std::uint64_t seed);

/// Unsigned distance from `p` to the closest point on the surface.
double distance_to_surface(const TriMesh& mesh, const Vec3& p);

/// Closest face to `p`; ties go to the lower face index.
std::size_t closest_face(const TriMesh& mesh, const Vec3& p);

enum class PrimitiveKind { Box, Cylinder, Sphere };

/// Primitive dimensions. Box uses size (x, y, z); cylinder uses radius and
/// height along z; sphere uses radius. `resolution` is the number of segments
/// around the circumference.
struct PrimitiveSpec {
  PrimitiveKind kind = PrimitiveKind::Box;
  Vec3 size = Vec3::Ones();
  double radius = 0.5;
  double height = 1.0;
  int resolution = 32;
};

/// Watertight, outward-wound mesh centered at the origin.
TriMesh make_primitive(const PrimitiveSpec& spec);

TriMesh make_box(double sx, double sy, double sz);
TriMesh make_cylinder(double radius, double height, int resolution);
TriMesh make_sphere(double radius, int resolution);

TriMesh transformed(const TriMesh& mesh, const RigidTransform& t);

/// Concatenates two meshes (no welding).
TriMesh merged(const TriMesh& a, const TriMesh& b);

}  // namespace jawgrasp
