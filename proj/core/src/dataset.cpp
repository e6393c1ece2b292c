#include "jawgrasp/dataset.hpp"

#include "jawgrasp/dataset_io.hpp"
#include "jawgrasp/errors.hpp"
#include "jawgrasp/io.hpp"
#include "jawgrasp/parallel.hpp"
#include "jawgrasp/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace jawgrasp {

namespace fs = std::filesystem;

const char* to_string(ViewKind view) noexcept { return view == ViewKind::Single ? "single" : "full"; }

ViewKind view_from_string(const std::string& s) {
  if (s == "single") return ViewKind::Single;
  if (s == "full") return ViewKind::Full;
  throw Error(ErrorCode::InvalidArgument, "unknown view '" + s + "'");
}

BinSpec BinSpec::from_grid(const FrictionGrid& grid, std::size_t quota) {
  BinSpec spec;
  spec.gammas = grid.values;
  spec.quota = quota;
  return spec;
}

std::optional<std::size_t> BinSpec::bin_of(std::optional<double> gamma_star) const {
  if (!gamma_star) return std::nullopt;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (gammas[i] == *gamma_star) return i;
  }
  return std::nullopt;
}

std::vector<SampledGrasp> sample_grasp_candidates(const TriMesh& mesh, const GripperModel& gripper,
                                                  std::size_t count, std::uint64_t seed) {
  if (mesh.empty()) throw Error(ErrorCode::EmptyMesh, "cannot sample grasps on an empty mesh");
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "grasp count must be positive");
  const PointCloud surface = sample_surface(mesh, 2 * count, seed);
  Rng rng(derive_seed(seed, 0xa9));
  std::vector<SampledGrasp> out;
  for (std::size_t i = 0; i < count; ++i) {
    const Vec3& p1 = surface.points[2 * i];
    const Vec3& p2 = surface.points[2 * i + 1];
    const double sep = (p2 - p1).norm();
    if (sep > gripper.max_aperture || sep <= 1e-6) continue;

    SampledGrasp s;
    s.contacts = {p1, p2, surface.normals[2 * i], surface.normals[2 * i + 1]};
    s.approach_angle = 0.5 * std::numbers::pi * rng.uniform();
    const Vec3 closing = (p2 - p1) / sep;
    const Vec3 approach = axis_angle(closing, s.approach_angle) * any_perpendicular(closing);
    s.grasp.center = 0.5 * (p1 + p2);
    s.grasp.rotation.col(0) = approach;
    s.grasp.rotation.col(1) = closing;
    s.grasp.rotation.col(2) = approach.cross(closing);
    out.push_back(s);
  }
  return out;
}

std::vector<FeasibleGrasp> filter_feasible(const std::vector<SampledGrasp>& grasps, const GripperModel& gripper,
                                           const PointCloud& surface) {
  std::vector<FeasibleGrasp> out;
  for (const auto& g : grasps) {
    const auto check = check_approach_and_close(g.grasp, gripper, surface);
    if (check.outcome == ApproachOutcome::Feasible) out.push_back({g, check.aperture});
  }
  return out;
}

int label_two_class(double q) { return q > kPositiveThreshold ? 1 : 0; }

int label_three_class(double q) {
  if (q >= kBestThreshold) return 2;
  if (q >= kMiddleThreshold) return 1;
  return 0;
}

ScoredGrasp score_and_label(const SampledGrasp& grasp, const TriMesh& mesh, const SurfacePatches& patches,
                            const MetricsConfig& config) {
  ScoredGrasp s;
  s.score = score_grasp(grasp.contacts, mesh, patches, config);
  s.label2 = label_two_class(s.score.q);
  s.label3 = label_three_class(s.score.q);
  return s;
}

std::vector<std::size_t> select_balanced(const std::vector<std::optional<double>>& gamma_stars,
                                         const BinSpec& spec, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> per_bin(spec.gammas.size());
  for (std::size_t i = 0; i < gamma_stars.size(); ++i) {
    if (const auto b = spec.bin_of(gamma_stars[i])) per_bin[*b].push_back(i);
  }
  std::ostringstream missing;
  std::optional<std::size_t> first_short;
  for (std::size_t b = 0; b < per_bin.size(); ++b) {
    if (per_bin[b].size() < spec.quota) {
      if (!first_short) first_short = b;
      missing << " bin 1/" << spec.gammas[b] << " has " << per_bin[b].size() << " of " << spec.quota << ';';
    }
  }
  if (first_short) {
    const auto b = *first_short;
    throw InsufficientBinError(1.0 / spec.gammas[b], per_bin[b].size(), spec.quota,
                               "not enough grasps:" + missing.str());
  }
  std::vector<std::size_t> chosen;
  for (std::size_t b = 0; b < per_bin.size(); ++b) {
    Rng rng(derive_seed(seed, b));
    for (auto k : rng.sample_without_replacement(per_bin[b].size(), spec.quota)) chosen.push_back(per_bin[b][k]);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::vector<DatasetRecord> balance_bins(const std::vector<DatasetRecord>& records, const BinSpec& spec,
                                        std::uint64_t seed) {
  std::vector<std::optional<double>> gammas;
  gammas.reserve(records.size());
  for (const auto& r : records) gammas.push_back(r.score.gamma_star);
  std::vector<DatasetRecord> out;
  for (auto i : select_balanced(gammas, spec, seed)) out.push_back(records[i]);
  return out;
}

std::optional<LocalCrop> extract_local_points(const GraspConfig& g, const GripperModel& gripper,
                                              const PointCloud& cloud, double aperture, std::uint64_t seed) {
  const auto idx = points_in_closing_region(g, gripper, cloud, aperture);
  if (idx.size() < kMinRegionPoints) return std::nullopt;

  const Mat3 rt = g.rotation.transpose();
  const Vec3 origin = gripper_origin(g, gripper);
  std::vector<std::size_t> rows;
  Rng rng(seed);
  if (idx.size() >= kGraspPoints) {
    rows = rng.sample_without_replacement(idx.size(), kGraspPoints);
  } else {
    // Keep every point once, then pad with draws (with replacement).
    rows.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) rows[i] = i;
    while (rows.size() < kGraspPoints) rows.push_back(rng.below(idx.size()));
  }
  LocalCrop crop;
  crop.region_count = idx.size();
  crop.points.resize(static_cast<Eigen::Index>(kGraspPoints), 3);
  for (std::size_t r = 0; r < kGraspPoints; ++r) {
    crop.points.row(static_cast<Eigen::Index>(r)) = (rt * (cloud.points[idx[rows[r]]] - origin)).transpose();
  }
  return crop;
}

PointSet augment_offset(const PointSet& points, const GripperModel& gripper, double aperture, std::uint64_t seed) {
  if (points.rows() == 0) return points;
  const Box3 region = closing_region(gripper, aperture);
  const Vec3 lo = points.colwise().minCoeff().transpose();
  const Vec3 hi = points.colwise().maxCoeff().transpose();
  Rng rng(seed);
  Vec3 offset;
  for (int k = 0; k < 3; ++k) {
    const double min_off = region.lo[k] - lo[k];
    const double max_off = region.hi[k] - hi[k];
    offset[k] = min_off <= max_off ? rng.uniform(min_off, max_off) : 0.5 * (min_off + max_off);
  }
  PointSet out = points.rowwise() + offset.transpose();
  // Rounding in the addition can land a boundary point one ulp outside.
  for (int k = 0; k < 3; ++k) out.col(k) = out.col(k).cwiseMax(region.lo[k]).cwiseMin(region.hi[k]);
  return out;
}

std::vector<RenderedView> render_views(const TriMesh& mesh, const ViewSetup& setup) {
  const Vec3 center = bounding_box_center(mesh);
  const double el = setup.elevation_deg * std::numbers::pi / 180.0;
  std::vector<RenderedView> out;
  for (int v = 0; v < setup.views; ++v) {
    const double az = 2.0 * std::numbers::pi * v / setup.views;
    const Vec3 eye = center + setup.radius * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    RenderedView view;
    view.camera_pose = look_at(eye, center, Vec3::UnitZ());
    view.cloud = raycast_depth(mesh, view.camera_pose, setup.intrinsics).transformed(view.camera_pose);
    out.push_back(std::move(view));
  }
  return out;
}

bool DatasetSummary::any_failure() const {
  return std::any_of(objects.begin(), objects.end(), [](const auto& o) { return !o.ok; });
}

std::vector<ObjectMesh> desk_primitives() {
  struct Item {
    const char* id;
    PrimitiveSpec spec;
  };
  auto box = [](double x, double y, double z) {
    PrimitiveSpec s;
    s.kind = PrimitiveKind::Box;
    s.size = Vec3(x, y, z);
    return s;
  };
  auto cylinder = [](double r, double h) {
    PrimitiveSpec s;
    s.kind = PrimitiveKind::Cylinder;
    s.radius = r;
    s.height = h;
    s.resolution = 48;
    return s;
  };
  auto sphere = [](double r) {
    PrimitiveSpec s;
    s.kind = PrimitiveKind::Sphere;
    s.radius = r;
    s.resolution = 40;
    return s;
  };
  const Item items[] = {
      {"box_block", box(0.04, 0.05, 0.07)},    {"box_flat", box(0.03, 0.06, 0.10)},
      {"box_cube", box(0.05, 0.05, 0.05)},     {"box_bar", box(0.025, 0.04, 0.12)},
      {"box_tall", box(0.035, 0.035, 0.09)},   {"cyl_can", cylinder(0.033, 0.12)},
      {"cyl_rod", cylinder(0.015, 0.10)},      {"cyl_puck", cylinder(0.04, 0.05)},
      {"cyl_cup", cylinder(0.025, 0.08)},      {"sphere_ball", sphere(0.035)},
      {"sphere_small", sphere(0.025)},         {"sphere_orange", sphere(0.04)},
  };
  std::vector<ObjectMesh> out;
  for (const auto& it : items) out.push_back({it.id, make_primitive(it.spec)});
  return out;
}

namespace {

struct ObjectStage {
  ObjectSummary summary;
  std::vector<RenderedView> views;
  PointCloud full;
  std::vector<FeasibleGrasp> feasible;
  std::vector<std::optional<double>> gammas;  // set for eligible grasps only
  std::vector<std::size_t> best_view;
  std::vector<std::size_t> chosen;  // indices into `feasible`
  std::vector<DatasetRecord> records;
};

void stage_object(const ObjectMesh& obj, const DatasetConfig& config, std::uint64_t object_seed, ObjectStage& out) {
  out.summary.id = obj.id;
  const auto& gripper = config.gripper;
  const BinSpec bins = BinSpec::from_grid(config.metrics.grid, config.quota);

  const PointCloud dense = sample_surface(obj.mesh, config.dense_samples, derive_seed(object_seed, 1));
  const auto sampled = sample_grasp_candidates(obj.mesh, gripper, config.samples_per_object, derive_seed(object_seed, 2));
  out.summary.sampled = sampled.size();
  out.feasible = filter_feasible(sampled, gripper, dense);
  out.summary.feasible = out.feasible.size();

  out.views = render_views(obj.mesh, config.views);
  for (const auto& v : out.views) out.full.append(v.cloud);

  // Eligible: antipodal on the grid, and both the best single view and the
  // fused cloud put enough points between the jaws.
  out.gammas.assign(out.feasible.size(), std::nullopt);
  out.best_view.assign(out.feasible.size(), 0);
  for (std::size_t i = 0; i < out.feasible.size(); ++i) {
    const auto fc = q_fc(out.feasible[i].sampled.contacts, config.metrics.grid);
    if (!fc.gamma_star) continue;
    const auto& g = out.feasible[i].sampled.grasp;
    std::size_t best = 0;
    for (std::size_t v = 0; v < out.views.size(); ++v) {
      const auto n = points_in_closing_region(g, gripper, out.views[v].cloud, gripper.max_aperture).size();
      if (n > best) {
        best = n;
        out.best_view[i] = v;
      }
    }
    if (best < kMinRegionPoints) continue;
    if (points_in_closing_region(g, gripper, out.full, gripper.max_aperture).size() < kMinRegionPoints) continue;
    out.gammas[i] = fc.gamma_star;
  }
  out.summary.available.assign(bins.gammas.size(), 0);
  for (const auto& g : out.gammas) {
    if (const auto b = bins.bin_of(g)) {
      ++out.summary.available[*b];
      ++out.summary.eligible;
    }
  }
  out.summary.ok = true;
}

void finish_object(const ObjectMesh& obj, const DatasetConfig& config, std::uint64_t object_seed, ObjectStage& st) {
  const auto& gripper = config.gripper;
  const SurfacePatches patches(obj.mesh, config.metrics.dense_samples, config.metrics.seed);
  for (auto i : st.chosen) {
    const auto& fg = st.feasible[i];
    const auto scored = score_and_label(fg.sampled, obj.mesh, patches, config.metrics);
    for (ViewKind view : {ViewKind::Single, ViewKind::Full}) {
      const PointCloud& cloud = view == ViewKind::Single ? st.views[st.best_view[i]].cloud : st.full;
      const auto crop = extract_local_points(fg.sampled.grasp, gripper, cloud, gripper.max_aperture,
                                             derive_seed(object_seed, 1000 + 2 * i + (view == ViewKind::Full)));
      DatasetRecord r;
      r.object_id = obj.id;
      r.grasp_index = i;
      r.grasp = fg.sampled.grasp;
      r.score = scored.score;
      r.label2 = scored.label2;
      r.label3 = scored.label3;
      r.view = view;
      r.region_count = crop->region_count;
      r.local_points = crop->points;
      st.records.push_back(std::move(r));
    }
  }
  st.summary.records = st.records.size();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string bin_key(double gamma) {
  std::ostringstream os;
  os << gamma;
  return os.str();
}

}  // namespace

DatasetSummary generate_dataset(const std::vector<ObjectMesh>& objects, const DatasetConfig& config,
                                std::uint64_t seed, const fs::path& out_dir,
                                const std::map<std::string, std::string>& config_echo) {
  if (objects.empty()) throw Error(ErrorCode::InvalidArgument, "no objects to generate a dataset from");
  config.gripper.validate();
  config.metrics.grid.validate();

  std::vector<ObjectStage> outputs(objects.size());
  parallel_for(objects.size(), config.threads, [&](std::size_t i) {
    try {
      stage_object(objects[i], config, derive_seed(seed, i), outputs[i]);
    } catch (const Error& e) {
      outputs[i] = ObjectStage{};
      outputs[i].summary.id = objects[i].id;
      outputs[i].summary.error = e.what();
    }
  });

  // Balance over the pooled grasps of all objects, in canonical order.
  std::vector<std::optional<double>> pooled;
  std::vector<std::pair<std::size_t, std::size_t>> owner;
  for (std::size_t o = 0; o < outputs.size(); ++o) {
    for (std::size_t i = 0; i < outputs[o].gammas.size(); ++i) {
      pooled.push_back(outputs[o].gammas[i]);
      owner.emplace_back(o, i);
    }
  }
  const BinSpec bins = BinSpec::from_grid(config.metrics.grid, config.quota);
  for (auto k : select_balanced(pooled, bins, derive_seed(seed, 0xba1a))) {
    outputs[owner[k].first].chosen.push_back(owner[k].second);
  }

  parallel_for(objects.size(), config.threads, [&](std::size_t i) {
    if (outputs[i].summary.ok) finish_object(objects[i], config, derive_seed(seed, i), outputs[i]);
  });

  for (const char* sub : {"objects", "clouds", "grasps", "tensors"}) fs::create_directories(out_dir / sub);

  DatasetSummary summary;
  summary.bins[ViewKind::Single].assign(bins.gammas.size(), 0);
  summary.bins[ViewKind::Full].assign(bins.gammas.size(), 0);

  nlohmann::ordered_json manifest;
  manifest["format_version"] = 1;
  manifest["seed"] = seed;
  nlohmann::ordered_json echo = nlohmann::ordered_json::object();
  std::string echo_text;
  for (const auto& [k, v] : config_echo) {
    echo[k] = v;
    echo_text += k + "=" + v + "\n";
  }
  manifest["config"] = echo;
  {
    std::ostringstream hex;
    hex << std::hex << fnv1a(echo_text);
    manifest["config_hash"] = hex.str();
  }
  const auto& gr = config.gripper;
  manifest["gripper"] = {{"max_aperture", gr.max_aperture},         {"finger_depth", gr.finger_depth},
                         {"hand_height", gr.hand_height},           {"finger_thickness", gr.finger_thickness},
                         {"base_depth", gr.base_depth},             {"standoff", gr.standoff},
                         {"approach_steps", gr.approach_steps},     {"close_steps", gr.close_steps}};
  manifest["points_per_grasp"] = kGraspPoints;
  manifest["quota"] = config.quota;
  manifest["bin_gammas"] = bins.gammas;

  nlohmann::ordered_json object_list = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < objects.size(); ++i) {
    auto& o = outputs[i];
    const auto& id = objects[i].id;
    save_mesh(objects[i].mesh, out_dir / "objects" / (id + ".obj"));

    nlohmann::ordered_json entry;
    entry["id"] = id;
    entry["status"] = o.summary.ok ? "ok" : "failed";
    if (!o.summary.ok) entry["error"] = o.summary.error;
    entry["sampled"] = o.summary.sampled;
    entry["feasible"] = o.summary.feasible;
    entry["eligible"] = o.summary.eligible;
    if (o.summary.ok) {
      nlohmann::ordered_json avail;
      for (std::size_t b = 0; b < bins.gammas.size(); ++b) avail[bin_key(bins.gammas[b])] = o.summary.available[b];
      entry["eligible_per_bin"] = avail;
    }

    if (o.summary.ok) {
      const fs::path cloud_dir = out_dir / "clouds" / id;
      fs::create_directories(cloud_dir);
      for (std::size_t v = 0; v < o.views.size(); ++v) {
        save_cloud(o.views[v].cloud, cloud_dir / ("view_" + std::to_string(v) + ".ply"));
      }
      save_cloud(o.full, cloud_dir / "full.ply");

      const auto offsets = write_tensor_file(out_dir / "tensors" / (id + ".bin"), o.records);
      std::ofstream jl(out_dir / "grasps" / (id + ".jsonl"), std::ios::binary);
      if (!jl) throw Error(ErrorCode::Io, "cannot write grasps for " + id);
      nlohmann::ordered_json obj_bins;
      std::map<ViewKind, std::vector<std::size_t>> counts;
      counts[ViewKind::Single].assign(bins.gammas.size(), 0);
      counts[ViewKind::Full].assign(bins.gammas.size(), 0);
      for (std::size_t r = 0; r < o.records.size(); ++r) {
        jl << record_to_json_line(o.records[r], offsets[r]) << '\n';
        const auto b = bins.bin_of(o.records[r].score.gamma_star);
        ++counts[o.records[r].view][*b];
        ++summary.bins[o.records[r].view][*b];
      }
      for (auto view : {ViewKind::Single, ViewKind::Full}) {
        nlohmann::ordered_json per;
        for (std::size_t b = 0; b < bins.gammas.size(); ++b) per[bin_key(bins.gammas[b])] = counts[view][b];
        obj_bins[to_string(view)] = per;
      }
      entry["bins"] = obj_bins;
      entry["records"] = o.records.size();
    }
    object_list.push_back(entry);
    summary.objects.push_back(o.summary);
  }
  manifest["objects"] = object_list;
  nlohmann::ordered_json totals;
  for (auto view : {ViewKind::Single, ViewKind::Full}) {
    nlohmann::ordered_json per;
    for (std::size_t b = 0; b < bins.gammas.size(); ++b) per[bin_key(bins.gammas[b])] = summary.bins[view][b];
    totals[to_string(view)] = per;
  }
  manifest["bins"] = totals;

  std::ofstream mf(out_dir / "manifest.json", std::ios::binary);
  if (!mf) throw Error(ErrorCode::Io, "cannot write manifest");
  mf << manifest.dump(2) << '\n';
  return summary;
}

}  // namespace jawgrasp
