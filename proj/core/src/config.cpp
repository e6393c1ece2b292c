#include "jawgrasp/config.hpp"

#include "jawgrasp/errors.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace jawgrasp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw Error(ErrorCode::InvalidArgument, key + ": not a number: '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw Error(ErrorCode::InvalidArgument, key + ": not an integer: '" + v + "'");
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const auto n = to_int(key, v);
  if (n < 0) throw Error(ErrorCode::InvalidArgument, key + ": must not be negative");
  return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::InvalidArgument, key + ": expected true or false");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Ref>
Field real(Ref ref) {
  return {[ref](RunConfig& c, const std::string& k, const std::string& v) { ref(c) = to_double(k, v); },
          [ref](const RunConfig& c) { return fmt(ref(const_cast<RunConfig&>(c))); }};
}

template <typename Ref>
Field integer(Ref ref) {
  return {[ref](RunConfig& c, const std::string& k, const std::string& v) {
            using T = std::remove_reference_t<decltype(ref(c))>;
            if constexpr (std::is_unsigned_v<T>) {
              ref(c) = static_cast<T>(to_count(k, v));
            } else {
              ref(c) = static_cast<T>(to_int(k, v));
            }
          },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

template <typename Ref>
Field boolean(Ref ref) {
  return {[ref](RunConfig& c, const std::string& k, const std::string& v) { ref(c) = to_bool(k, v); },
          [ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

template <typename Ref>
Field int_list(Ref ref) {
  return {[ref](RunConfig& c, const std::string& k, const std::string& v) {
            std::vector<int> out;
            for (const auto& s : split_list(v)) out.push_back(static_cast<int>(to_int(k, s)));
            ref(c) = out;
          },
          [ref](const RunConfig& c) { return fmt_list(ref(const_cast<RunConfig&>(c))); }};
}

template <typename Ref>
Field real_list(Ref ref) {
  return {[ref](RunConfig& c, const std::string& k, const std::string& v) {
            std::vector<double> out;
            for (const auto& s : split_list(v)) out.push_back(to_double(k, s));
            ref(c) = out;
          },
          [ref](const RunConfig& c) { return fmt_list(ref(const_cast<RunConfig&>(c))); }};
}

#define JG_REF(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"gripper.w_max_m", real(JG_REF(dataset.gripper.max_aperture))},
      {"gripper.finger_depth_m", real(JG_REF(dataset.gripper.finger_depth))},
      {"gripper.hand_height_m", real(JG_REF(dataset.gripper.hand_height))},
      {"gripper.finger_thickness_m", real(JG_REF(dataset.gripper.finger_thickness))},
      {"gripper.base_depth_m", real(JG_REF(dataset.gripper.base_depth))},
      {"gripper.standoff_m", real(JG_REF(dataset.gripper.standoff))},
      {"gripper.approach_steps", integer(JG_REF(dataset.gripper.approach_steps))},
      {"gripper.close_steps", integer(JG_REF(dataset.gripper.close_steps))},

      {"metrics.alpha", real(JG_REF(dataset.metrics.alpha))},
      {"metrics.beta", real(JG_REF(dataset.metrics.beta))},
      {"metrics.friction_grid", real_list(JG_REF(dataset.metrics.grid.values))},
      {"metrics.patch_radius_m", real(JG_REF(dataset.metrics.patch_radius))},
      {"metrics.max_patch_points", integer(JG_REF(dataset.metrics.max_patch_points))},
      {"metrics.surface_tolerance_m", real(JG_REF(dataset.metrics.surface_tolerance))},
      {"metrics.dense_samples", integer(JG_REF(dataset.metrics.dense_samples))},
      {"metrics.seed", integer(JG_REF(dataset.metrics.seed))},

      {"dataset.samples_per_object", integer(JG_REF(dataset.samples_per_object))},
      {"dataset.dense_samples", integer(JG_REF(dataset.dense_samples))},
      {"dataset.quota", integer(JG_REF(dataset.quota))},
      {"dataset.views", integer(JG_REF(dataset.views.views))},
      {"dataset.elevation_deg", real(JG_REF(dataset.views.elevation_deg))},
      {"dataset.camera_radius_m", real(JG_REF(dataset.views.radius))},
      {"camera.fx", real(JG_REF(dataset.views.intrinsics.fx))},
      {"camera.fy", real(JG_REF(dataset.views.intrinsics.fy))},
      {"camera.cx", real(JG_REF(dataset.views.intrinsics.cx))},
      {"camera.cy", real(JG_REF(dataset.views.intrinsics.cy))},
      {"camera.width", integer(JG_REF(dataset.views.intrinsics.width))},
      {"camera.height", integer(JG_REF(dataset.views.intrinsics.height))},

      {"candidates.k_neighbors", integer(JG_REF(candidates.frames.k_neighbors))},
      {"candidates.frames", integer(JG_REF(candidates.frames.count))},
      {"candidates.seed", integer(JG_REF(candidates.frames.seed))},
      {"candidates.yaw_steps", integer(JG_REF(candidates.search.yaw_steps))},
      {"candidates.offset_steps", integer(JG_REF(candidates.search.offset_steps))},
      {"candidates.offset_span_m", real(JG_REF(candidates.search.offset_span))},
      {"candidates.start_clearance_m", real(JG_REF(candidates.search.start_clearance))},
      {"candidates.near_table_m", real(JG_REF(candidates.table.near_tol))},
      {"candidates.pull_step_m", real(JG_REF(candidates.table.pull_step))},
      {"candidates.max_pulls", integer(JG_REF(candidates.table.max_pulls))},
      {"candidates.ransac_tol_m", real(JG_REF(candidates.ransac.inlier_tol))},
      {"candidates.ransac_iterations", integer(JG_REF(candidates.ransac.iterations))},

      {"net.point_widths", int_list(JG_REF(net.point_widths))},
      {"net.head_widths", int_list(JG_REF(net.head_widths))},
      {"net.use_input_transform", boolean(JG_REF(net.use_input_transform))},
      {"net.transform_point_widths", int_list(JG_REF(net.transform_point_widths))},
      {"net.transform_head_widths", int_list(JG_REF(net.transform_head_widths))},
      {"net.dropout", real(JG_REF(net.dropout))},
      {"net.init_std", real(JG_REF(net.init_std))},
      {"net.input_scale", real(JG_REF(net.input_scale))},

      {"train.batch_size", integer(JG_REF(training.batch_size))},
      {"train.lr", real(JG_REF(training.adam.lr))},
      {"train.beta1", real(JG_REF(training.adam.beta1))},
      {"train.beta2", real(JG_REF(training.adam.beta2))},
      {"train.eps", real(JG_REF(training.adam.eps))},
      {"train.lr_halving_epochs", integer(JG_REF(training.lr_halving_epochs))},
      {"train.augment", boolean(JG_REF(training.augment))},
      {"train.held_out_fraction", real(JG_REF(held_out_fraction))},
  };
  return table;
}

#undef JG_REF

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& table = fields();
  const auto it = table.find(key);
  if (it == table.end()) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  it->second.set(*this, key, value);
  sync();
}

std::map<std::string, std::string> RunConfig::echo() const {
  std::map<std::string, std::string> out;
  for (const auto& [key, field] : fields()) out[key] = field.get(*this);
  return out;
}

void RunConfig::sync() { training.gripper = dataset.gripper; }

RunConfig parse_config(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected 'key = value'");
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  cfg.dataset.gripper.validate();
  cfg.dataset.metrics.grid.validate();
  cfg.dataset.views.intrinsics.validate();
  cfg.net.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace jawgrasp
