#pragma once

#include "jawgrasp/cloud.hpp"
#include "jawgrasp/geometry.hpp"

#include <span>

namespace jawgrasp {

struct IcpResult {
  RigidTransform transform;  // maps source onto target
  double rms = 0.0;
  int iterations = 0;
};

/// Least-squares rotation + translation (no scale) mapping src[i] onto dst[i].
RigidTransform best_fit_transform(std::span<const Vec3> src, std::span<const Vec3> dst);

/// Point-to-point ICP. Starts from centroid alignment and stops when the RMS
/// change drops below `tol` or after `max_iters` iterations.
IcpResult icp_rigid(const PointCloud& source, const PointCloud& target, int max_iters = 100,
                    double tol = 1e-12);

}  // namespace jawgrasp
