#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vdp/estimator.hpp"
#include "vdp/search.hpp"
#include "vdp/serialize.hpp"

namespace vdpcli {

/// Bad flags, missing or unknown config keys, inconsistent inputs.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SegmentConfig {
  int train_len = 100;
  int test_len = 20;
  int n_segments = 5;
  std::vector<int> offsets;
};

struct ForecastConfig {
  int horizon = 9;
  int var_order = 6;
  int stride = 1;
  bool var_refit_per_window = false;
  std::vector<std::string> methods{"vdp", "var"};
};

struct ExportConfig {
  double noise_sigma = 0.1;
  int max_attempts = 10;
};

/// Every tunable of a run. Loaded from a JSON document in which every key is
/// required and unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 42;
  std::string log_level = "info";
  vdp::PenaltyConfig penalty;
  vdp::SearchConfig search;
  SegmentConfig segments;
  ForecastConfig forecast;
  ExportConfig export_;
};

vdp::Json config_to_json(const RunConfig& cfg);
/// Throws UsageError naming the dotted path of the first missing, unknown or
/// mistyped key.
RunConfig config_from_json(const vdp::Json& j);
RunConfig load_config(const std::string& path);

}  // namespace vdpcli
