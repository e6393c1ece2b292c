#pragma once

#include "jawgrasp/cloud.hpp"
#include "jawgrasp/mesh.hpp"

#include <filesystem>

namespace jawgrasp {

/// Wavefront OBJ (`v` and `f` records, 1-based or negative indices).
/// Polygons are fan-triangulated; zero-area triangles are dropped.
TriMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);

/// PLY, ascii or binary_little_endian. Reads x,y,z and nx,ny,nz when present.
PointCloud load_cloud(const std::filesystem::path& path);

enum class PlyEncoding { BinaryLittleEndian, Ascii };

/// Writes float32 x,y,z (and nx,ny,nz when the cloud has normals).
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

}  // namespace jawgrasp
