#pragma once

#include "jawgrasp/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace jawgrasp {

/// Tensor file: "PGPD", u32 version (1), u32 record count, then per record
/// u32 point count, count x 3 float32, float32 q, u8 label2, u8 label3.
/// All little-endian.
inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr std::size_t kTensorHeaderBytes = 12;

struct TensorRecord {
  PointSet points;
  float q = 0.0F;
  std::uint8_t label2 = 0;
  std::uint8_t label3 = 0;
};

/// Writes the records' tensors; returns each record's byte offset.
std::vector<std::uint64_t> write_tensor_file(const std::filesystem::path& path,
                                             const std::vector<DatasetRecord>& records);
std::vector<TensorRecord> read_tensor_file(const std::filesystem::path& path);
/// Reads one record at `offset` bytes into the file.
TensorRecord read_tensor_at(const std::filesystem::path& path, std::uint64_t offset);

/// One JSONL line for `record` (no trailing newline).
std::string record_to_json_line(const DatasetRecord& record, std::uint64_t tensor_offset);

struct DatasetFilter {
  std::optional<ViewKind> view;
};

struct LoadedDataset {
  GripperModel gripper;
  std::vector<DatasetRecord> records;
};

/// Loads every object's JSONL and tensor file listed in the manifest.
/// Re-validates that points lie in the closing region (1e-6 m slack for
/// float32 storage) and that labels agree with the stored q.
LoadedDataset load_dataset(const std::filesystem::path& dir, const DatasetFilter& filter = {});

}  // namespace jawgrasp
