#pragma once

#include "jawgrasp/candidates.hpp"
#include "jawgrasp/dataset.hpp"
#include "jawgrasp/net.hpp"
#include "jawgrasp/train.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace jawgrasp {

/// Every tunable of the pipeline. Loaded from `key = value` lines; `#` starts
/// a comment. Lists are comma separated.
struct RunConfig {
  DatasetConfig dataset;  // gripper, metrics and views live here
  CandidatePipeline candidates;
  NetConfig net;
  TrainOptions training;
  double held_out_fraction = 0.2;

  /// Sets one key; throws InvalidArgument for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Resolved value of every key, formatted so that parsing it back is lossless.
  std::map<std::string, std::string> echo() const;
  /// Pushes the shared gripper into the sections that carry a copy.
  void sync();
};

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace jawgrasp
