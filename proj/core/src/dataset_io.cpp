#include "jawgrasp/dataset_io.hpp"

#include "jawgrasp/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace jawgrasp {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'P', 'G', 'P', 'D'};

template <typename T>
void put(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

class Reader {
 public:
  Reader(std::string data, std::string file) : data_(std::move(data)), file_(std::move(file)) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) throw ParseError(file_, pos_, "unexpected end of tensor file");
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void seek(std::size_t p) {
    if (p > data_.size()) throw ParseError(file_, p, "offset past end of tensor file");
    pos_ = p;
  }
  std::size_t pos() const { return pos_; }
  const std::string& file() const { return file_; }

 private:
  std::string data_;
  std::string file_;
  std::size_t pos_ = 0;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TensorRecord read_record(Reader& r) {
  const auto start = r.pos();
  const auto n = r.get<std::uint32_t>();
  if (n != kGraspPoints) throw ParseError(r.file(), start, "record has " + std::to_string(n) + " points");
  TensorRecord rec;
  rec.points.resize(n, 3);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) rec.points(i, k) = r.get<float>();
  }
  rec.q = r.get<float>();
  rec.label2 = r.get<std::uint8_t>();
  rec.label3 = r.get<std::uint8_t>();
  return rec;
}

Reader open_tensors(const fs::path& path, std::uint32_t& count) {
  Reader r(slurp(path), path.string());
  char magic[4];
  for (char& c : magic) c = r.get<char>();
  if (std::memcmp(magic, kMagic, 4) != 0) throw ParseError(path.string(), 0, "bad tensor magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kTensorVersion) throw ParseError(path.string(), 4, "unsupported tensor version " + std::to_string(version));
  count = r.get<std::uint32_t>();
  return r;
}

}  // namespace

std::vector<std::uint64_t> write_tensor_file(const fs::path& path, const std::vector<DatasetRecord>& records) {
  std::string buf;
  buf.append(kMagic, 4);
  put<std::uint32_t>(buf, kTensorVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(records.size()));
  std::vector<std::uint64_t> offsets;
  offsets.reserve(records.size());
  for (const auto& r : records) {
    if (static_cast<std::size_t>(r.local_points.rows()) != kGraspPoints) {
      throw Error(ErrorCode::ShapeMismatch, "record must hold exactly 1000 points");
    }
    offsets.push_back(buf.size());
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(kGraspPoints));
    for (Eigen::Index i = 0; i < r.local_points.rows(); ++i) {
      for (int k = 0; k < 3; ++k) put<float>(buf, static_cast<float>(r.local_points(i, k)));
    }
    put<float>(buf, static_cast<float>(r.score.q));
    put<std::uint8_t>(buf, static_cast<std::uint8_t>(r.label2));
    put<std::uint8_t>(buf, static_cast<std::uint8_t>(r.label3));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  return offsets;
}

std::vector<TensorRecord> read_tensor_file(const fs::path& path) {
  std::uint32_t count = 0;
  Reader r = open_tensors(path, count);
  std::vector<TensorRecord> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) out.push_back(read_record(r));
  return out;
}

TensorRecord read_tensor_at(const fs::path& path, std::uint64_t offset) {
  std::uint32_t count = 0;
  Reader r = open_tensors(path, count);
  r.seek(offset);
  return read_record(r);
}

std::string record_to_json_line(const DatasetRecord& record, std::uint64_t tensor_offset) {
  nlohmann::ordered_json j;
  j["object_id"] = record.object_id;
  j["grasp_index"] = record.grasp_index;
  j["center"] = {record.grasp.center.x(), record.grasp.center.y(), record.grasp.center.z()};
  auto rot = nlohmann::ordered_json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(record.grasp.rotation(r, c));
  }
  j["rotation"] = rot;
  j["gamma_star"] = record.score.gamma_star ? nlohmann::ordered_json(*record.score.gamma_star) : nullptr;
  j["q_fc"] = record.score.q_fc;
  j["q_gws"] = record.score.q_gws;
  j["q"] = record.score.q;
  j["label2"] = record.label2;
  j["label3"] = record.label3;
  j["view"] = to_string(record.view);
  j["region_count"] = record.region_count;
  j["tensor_offset"] = tensor_offset;
  return j.dump();
}

LoadedDataset load_dataset(const fs::path& dir, const DatasetFilter& filter) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw Error(ErrorCode::Io, "no manifest.json in " + dir.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(slurp(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string(), 0, e.what());
  }

  LoadedDataset out;
  try {
    const auto& g = manifest.at("gripper");
    out.gripper.max_aperture = g.at("max_aperture");
    out.gripper.finger_depth = g.at("finger_depth");
    out.gripper.hand_height = g.at("hand_height");
    out.gripper.finger_thickness = g.at("finger_thickness");
    out.gripper.base_depth = g.at("base_depth");
    out.gripper.standoff = g.at("standoff");
    out.gripper.approach_steps = g.at("approach_steps");
    out.gripper.close_steps = g.at("close_steps");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string(), 0, std::string("gripper block: ") + e.what());
  }
  out.gripper.validate();

  Box3 region = closing_region(out.gripper, out.gripper.max_aperture);
  region.lo.array() -= 1e-6;
  region.hi.array() += 1e-6;

  for (const auto& obj : manifest.at("objects")) {
    if (obj.at("status") != "ok") continue;
    const std::string id = obj.at("id");
    const fs::path jl_path = dir / "grasps" / (id + ".jsonl");
    const fs::path tensor_path = dir / "tensors" / (id + ".bin");
    std::uint32_t count = 0;
    Reader tensors = open_tensors(tensor_path, count);

    std::ifstream jl(jl_path);
    if (!jl) throw Error(ErrorCode::Io, "cannot open " + jl_path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(jl, line)) {
      ++lineno;
      if (line.empty()) continue;
      DatasetRecord rec;
      std::uint64_t offset = 0;
      try {
        const auto j = nlohmann::json::parse(line);
        rec.object_id = j.at("object_id");
        rec.grasp_index = j.at("grasp_index");
        const auto& c = j.at("center");
        rec.grasp.center = Vec3(c.at(0), c.at(1), c.at(2));
        const auto& rot = j.at("rotation");
        for (int r = 0; r < 3; ++r) {
          for (int k = 0; k < 3; ++k) rec.grasp.rotation(r, k) = rot.at(3 * r + k);
        }
        if (!j.at("gamma_star").is_null()) rec.score.gamma_star = j.at("gamma_star").get<double>();
        rec.score.q_fc = j.at("q_fc");
        rec.score.q_gws = j.at("q_gws");
        rec.score.q = j.at("q");
        rec.label2 = j.at("label2");
        rec.label3 = j.at("label3");
        rec.view = view_from_string(j.at("view"));
        rec.region_count = j.at("region_count");
        offset = j.at("tensor_offset");
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(jl_path.string(), lineno, e.what());
      }
      if (filter.view && rec.view != *filter.view) continue;

      tensors.seek(offset);
      TensorRecord t = read_record(tensors);
      if (t.label2 != rec.label2 || t.label3 != rec.label3) {
        throw ParseError(jl_path.string(), lineno, "labels disagree with tensor file");
      }
      if (label_two_class(rec.score.q) != rec.label2 || label_three_class(rec.score.q) != rec.label3) {
        throw Error(ErrorCode::LabelOutOfRange, jl_path.string() + ":" + std::to_string(lineno) +
                                                    ": labels inconsistent with q");
      }
      for (Eigen::Index i = 0; i < t.points.rows(); ++i) {
        if (!region.contains(t.points.row(i).transpose())) {
          throw ParseError(tensor_path.string(), offset, "point outside the closing region");
        }
      }
      rec.local_points = std::move(t.points);
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace jawgrasp
