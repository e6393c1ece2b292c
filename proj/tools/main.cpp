#include <jawgrasp/candidates.hpp>
#include <jawgrasp/config.hpp>
#include <jawgrasp/dataset.hpp>
#include <jawgrasp/dataset_io.hpp>
#include <jawgrasp/errors.hpp>
#include <jawgrasp/io.hpp>
#include <jawgrasp/metrics.hpp>
#include <jawgrasp/net.hpp>
#include <jawgrasp/parallel.hpp>
#include <jawgrasp/rng.hpp>
#include <jawgrasp/train.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace jawgrasp;
using json = nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LogLevel { Quiet, Info, Debug };

LogLevel log_level() {
  const char* env = std::getenv("JAWGRASP_LOG");
  if (!env) return LogLevel::Info;
  const std::string v = env;
  if (v == "quiet") return LogLevel::Quiet;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

void log(const std::string& msg) {
  if (log_level() != LogLevel::Quiet) std::cerr << msg << '\n';
}

std::vector<double> parse_reals(const std::string& text, std::size_t expected, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(what + ": bad number '" + item + "'");
    }
  }
  if (out.size() != expected) throw UsageError(what + ": expected " + std::to_string(expected) + " comma-separated values");
  return out;
}

json pose_json(const GraspConfig& g) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(g.rotation(r, c));
  }
  return {{"center", {g.center.x(), g.center.y(), g.center.z()}}, {"rotation", rot}};
}

std::vector<fs::path> obj_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".obj") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void require_dir(const fs::path& dir, const std::string& flag) {
  if (!fs::is_directory(dir)) throw UsageError(flag + ": no such directory: " + dir.string());
}

void require_file(const fs::path& f, const std::string& flag) {
  if (!fs::is_regular_file(f)) throw UsageError(flag + ": no such file: " + f.string());
}

std::optional<ViewKind> parse_view(const std::string& v) {
  if (v == "all") return std::nullopt;
  return view_from_string(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel-jaw grasp dataset generation, scoring and classification"};
  app.require_subcommand(0, 1);

  std::string config_path;
  unsigned threads = default_threads();
  bool print_param_count = false;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--set-key", overrides, "Override one config key (key=value); repeatable");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--param-count", print_param_count, "Print the classifier parameter count for the resolved config");

  // gen-objects
  auto* gen_objects = app.add_subcommand("gen-objects", "Write the object mesh corpus");
  std::string go_out;
  std::vector<std::string> go_set;
  gen_objects->add_option("--out", go_out, "Output directory")->required();
  gen_objects->add_option("--set", go_set, "'primitives' or 'from-dir PATH'")->expected(1, 2)->required();

  // gen-dataset
  auto* gen_dataset = app.add_subcommand("gen-dataset", "Generate the labeled grasp dataset");
  std::string gd_objects, gd_out;
  std::optional<std::size_t> gd_quota;
  std::optional<int> gd_views;
  std::uint64_t gd_seed = 0;
  gen_dataset->add_option("--objects", gd_objects, "Directory of OBJ meshes")->required();
  gen_dataset->add_option("--out", gd_out, "Dataset directory")->required();
  gen_dataset->add_option("--quota", gd_quota, "Grasps per q_fc bin");
  gen_dataset->add_option("--views", gd_views, "Camera views per object");
  gen_dataset->add_option("--seed", gd_seed, "Random seed");

  // score
  auto* score = app.add_subcommand("score", "Score one contact pair on a mesh");
  std::string sc_mesh, sc_contacts;
  score->add_option("--mesh", sc_mesh, "OBJ mesh")->required();
  score->add_option("--contacts", sc_contacts, "x1,y1,z1,x2,y2,z2")->required();

  // candidates
  auto* candidates = app.add_subcommand("candidates", "Sample grasp candidates from a point cloud");
  std::string ca_cloud, ca_out, ca_table = "auto", ca_viewpoint = "0,0,0";
  candidates->add_option("--cloud", ca_cloud, "PLY cloud")->required();
  candidates->add_option("--out", ca_out, "Output JSONL")->required();
  candidates->add_option("--table", ca_table, "auto or none")->check(CLI::IsMember({"auto", "none"}));
  candidates->add_option("--viewpoint", ca_viewpoint, "Sensor position x,y,z in the cloud frame");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the grasp-quality classifier");
  std::string tr_dataset, tr_out, tr_metrics, tr_view = "single";
  int tr_classes = 2;
  int tr_epochs = 200;
  std::uint64_t tr_seed = 0;
  train_cmd->add_option("--dataset", tr_dataset, "Dataset directory")->required();
  train_cmd->add_option("--classes", tr_classes, "2 or 3")->check(CLI::IsMember({2, 3}));
  train_cmd->add_option("--epochs", tr_epochs, "Epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", tr_seed, "Random seed");
  train_cmd->add_option("--out", tr_out, "Model file")->required();
  train_cmd->add_option("--metrics", tr_metrics, "Per-epoch CSV (default: <out>.csv)");
  train_cmd->add_option("--view", tr_view, "single, full or all")->check(CLI::IsMember({"single", "full", "all"}));

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a dataset");
  std::string ev_model, ev_dataset, ev_view = "single", ev_split = "held-out";
  std::uint64_t ev_seed = 0;
  eval_cmd->add_option("--model", ev_model, "Model file")->required();
  eval_cmd->add_option("--dataset", ev_dataset, "Dataset directory")->required();
  eval_cmd->add_option("--view", ev_view, "single, full or all")->check(CLI::IsMember({"single", "full", "all"}));
  eval_cmd->add_option("--split", ev_split, "train, held-out or all (must match the training seed)")
      ->check(CLI::IsMember({"train", "held-out", "all"}));
  eval_cmd->add_option("--seed", ev_seed, "Seed used for the split at training time");

  // infer
  auto* infer = app.add_subcommand("infer", "Rank grasp candidates on a cloud with a trained model");
  std::string in_model, in_cloud, in_table = "auto", in_viewpoint = "0,0,0";
  std::size_t in_top_k = 10;
  std::uint64_t in_seed = 0;
  infer->add_option("--model", in_model, "Model file")->required();
  infer->add_option("--cloud", in_cloud, "PLY cloud")->required();
  infer->add_option("--top-k", in_top_k, "Poses to print");
  infer->add_option("--table", in_table, "auto or none")->check(CLI::IsMember({"auto", "none"}));
  infer->add_option("--viewpoint", in_viewpoint, "Sensor position x,y,z in the cloud frame");
  infer->add_option("--seed", in_seed, "Seed for crop resampling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set-key expects key=value");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (gd_quota) cfg.set("dataset.quota", std::to_string(*gd_quota));
    if (gd_views) cfg.set("dataset.views", std::to_string(*gd_views));
    cfg.dataset.threads = threads;
    cfg.candidates.frames.threads = threads;
    cfg.candidates.search.threads = threads;
    cfg.net.classes = tr_classes;
    cfg.sync();

    const auto echo = cfg.echo();
    for (const auto& [k, v] : echo) log("config " + k + " = " + v);
    log("config threads = " + std::to_string(threads));

    if (print_param_count) {
      std::cout << json{{"classes", cfg.net.classes}, {"parameters", parameter_count(cfg.net)}}.dump() << '\n';
      if (app.get_subcommands().empty()) return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 2;
    }

    if (*gen_objects) {
      fs::create_directories(go_out);
      if (go_set[0] == "primitives") {
        if (go_set.size() != 1) throw UsageError("--set primitives takes no path");
        for (const auto& obj : desk_primitives()) {
          save_mesh(obj.mesh, fs::path(go_out) / (obj.id + ".obj"));
          std::cout << json{{"object", obj.id}, {"status", "ok"}}.dump() << '\n';
        }
        return 0;
      }
      if (go_set[0] != "from-dir" || go_set.size() != 2) throw UsageError("--set expects 'primitives' or 'from-dir PATH'");
      require_dir(go_set[1], "--set from-dir");
      bool failed = false;
      for (const auto& f : obj_files(go_set[1])) {
        try {
          TriMesh m = load_mesh(f);
          m.validate();
          if (!m.is_watertight()) log("warning: " + f.string() + " is not watertight");
          save_mesh(m, fs::path(go_out) / f.filename());
          std::cout << json{{"object", f.stem().string()}, {"status", "ok"}}.dump() << '\n';
        } catch (const Error& e) {
          failed = true;
          std::cout << json{{"object", f.stem().string()}, {"status", "error"}, {"file", f.string()}, {"error", e.what()}}.dump()
                    << '\n';
        }
      }
      return failed ? 1 : 0;
    }

    if (*gen_dataset) {
      require_dir(gd_objects, "--objects");
      std::vector<ObjectMesh> objects;
      for (const auto& f : obj_files(gd_objects)) objects.push_back({f.stem().string(), load_mesh(f)});
      if (objects.empty()) throw UsageError("--objects: no .obj files in " + gd_objects);
      const auto summary = generate_dataset(objects, cfg.dataset, gd_seed, gd_out, echo);
      for (const auto& o : summary.objects) {
        json j{{"object", o.id}, {"status", o.ok ? "ok" : "failed"}, {"records", o.records}};
        if (!o.ok) j["error"] = o.error;
        std::cout << j.dump() << '\n';
      }
      return summary.any_failure() ? 1 : 0;
    }

    if (*score) {
      require_file(sc_mesh, "--mesh");
      const auto v = parse_reals(sc_contacts, 6, "--contacts");
      const TriMesh mesh = load_mesh(sc_mesh);
      const ContactPair c = contacts_on_mesh(mesh, Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5]),
                                             cfg.dataset.metrics.surface_tolerance);
      const SurfacePatches patches(mesh, cfg.dataset.metrics.dense_samples, cfg.dataset.metrics.seed);
      const GraspScore s = score_grasp(c, mesh, patches, cfg.dataset.metrics);
      json j;
      j["gamma_star"] = s.gamma_star ? json(*s.gamma_star) : json(nullptr);
      j["q_fc"] = s.q_fc;
      j["q_gws"] = s.q_gws;
      j["q"] = s.q;
      j["label2"] = label_two_class(s.q);
      j["label3"] = label_three_class(s.q);
      std::cout << j.dump() << '\n';
      return 0;
    }

    auto run_candidates = [&](const std::string& cloud_path, const std::string& table, const std::string& viewpoint) {
      require_file(cloud_path, "--cloud");
      const auto vp = parse_reals(viewpoint, 3, "--viewpoint");
      cfg.candidates.frames.viewpoint = Vec3(vp[0], vp[1], vp[2]);
      const PointCloud cloud = load_cloud(cloud_path);
      auto result = plan_candidates(cloud, cfg.dataset.gripper, table == "auto" ? TableMode::Auto : TableMode::None,
                                    cfg.candidates);
      if (result.table) {
        std::ostringstream os;
        os << "table normal " << result.table->normal.transpose() << " offset " << result.table->offset;
        log(os.str());
      }
      return std::pair{cloud, std::move(result)};
    };

    if (*candidates) {
      const auto [cloud, result] = run_candidates(ca_cloud, ca_table, ca_viewpoint);
      std::ofstream out(ca_out);
      if (!out) throw Error(ErrorCode::Io, "cannot write " + ca_out);
      for (const auto& c : result.candidates) {
        json j = pose_json(c.grasp);
        j["region_count"] = c.region_count;
        j["frame"] = c.frame_index;
        out << j.dump() << '\n';
      }
      log("wrote " + std::to_string(result.candidates.size()) + " candidates");
      return 0;
    }

    if (*train_cmd) {
      require_dir(tr_dataset, "--dataset");
      const auto data = load_dataset(tr_dataset, {parse_view(tr_view)});
      if (data.records.empty()) throw Error(ErrorCode::EmptyDataset, "no records in " + tr_dataset);
      const auto split = split_by_grasp(data.records, tr_classes, cfg.held_out_fraction, tr_seed);
      const auto all = samples_from_records(data.records, tr_classes);
      std::vector<Sample> train_set, held_out;
      for (auto i : split.train) train_set.push_back(all[i]);
      for (auto i : split.held_out) held_out.push_back(all[i]);
      cfg.training.epochs = tr_epochs;
      cfg.training.seed = tr_seed;
      cfg.training.gripper = data.gripper;
      cfg.net.seed = derive_seed(tr_seed, 7);
      log("training on " + std::to_string(train_set.size()) + " samples, holding out " + std::to_string(held_out.size()));

      const auto result = train(train_set, held_out, cfg.net, cfg.training);
      save_model(result.best, tr_out);
      const std::string metrics_path = tr_metrics.empty() ? tr_out + ".csv" : tr_metrics;
      std::ofstream csv(metrics_path);
      if (!csv) throw Error(ErrorCode::Io, "cannot write " + metrics_path);
      csv << "epoch,train_loss,train_accuracy,held_out_loss,held_out_accuracy\n";
      csv.precision(10);
      for (const auto& m : result.history) {
        csv << m.epoch << ',' << m.train_loss << ',' << m.train_accuracy << ',' << m.held_out_loss << ','
            << m.held_out_accuracy << '\n';
      }
      std::cout << json{{"best_epoch", result.best_epoch},
                        {"held_out_accuracy", result.history[static_cast<std::size_t>(result.best_epoch - 1)].held_out_accuracy},
                        {"majority_baseline", held_out.empty() ? 0.0 : majority_baseline(held_out, tr_classes)},
                        {"model", tr_out},
                        {"metrics", metrics_path}}
                       .dump()
                << '\n';
      return 0;
    }

    if (*eval_cmd) {
      require_file(ev_model, "--model");
      require_dir(ev_dataset, "--dataset");
      const NetParams params = load_model(ev_model);
      const auto data = load_dataset(ev_dataset, {parse_view(ev_view)});
      const int classes = params.config.classes;
      const auto all = samples_from_records(data.records, classes);
      std::vector<Sample> chosen;
      if (ev_split == "all") {
        chosen = all;
      } else {
        const auto split = split_by_grasp(data.records, classes, cfg.held_out_fraction, ev_seed);
        for (auto i : ev_split == "train" ? split.train : split.held_out) chosen.push_back(all[i]);
      }
      const Evaluation e = evaluate(params, chosen);
      json per = json::array();
      for (double a : e.per_class_accuracy) per.push_back(std::isnan(a) ? json(nullptr) : json(a));
      std::cout << json{{"samples", e.count},
                        {"loss", e.loss},
                        {"accuracy", e.accuracy},
                        {"best_class_accuracy", std::isnan(e.best_class_accuracy) ? json(nullptr) : json(e.best_class_accuracy)},
                        {"per_class_accuracy", per},
                        {"per_class_count", e.per_class_count}}
                       .dump()
                << '\n';
      return 0;
    }

    if (*infer) {
      require_file(in_model, "--model");
      const NetParams params = load_model(in_model);
      const auto [cloud, result] = run_candidates(in_cloud, in_table, in_viewpoint);
      const auto ranked = rank_candidates(params, result.candidates, cloud, cfg.dataset.gripper, in_seed);
      log(std::to_string(ranked.size()) + " of " + std::to_string(result.candidates.size()) +
          " candidates had enough points to classify");
      for (std::size_t i = 0; i < std::min(in_top_k, ranked.size()); ++i) {
        json j = pose_json(ranked[i].candidate.grasp);
        j["rank"] = i + 1;
        j["label"] = ranked[i].prediction.label;
        j["probabilities"] = std::vector<double>(ranked[i].prediction.probabilities.data(),
                                                 ranked[i].prediction.probabilities.data() +
                                                     ranked[i].prediction.probabilities.size());
        j["region_count"] = ranked[i].crop_count;
        std::cout << j.dump() << '\n';
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const InsufficientBinError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
