#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmfgp/estimation.hpp"
#include "rmfgp/fit.hpp"
#include "rmfgp/io.hpp"
#include "rmfgp/optimizer.hpp"
#include "rmfgp/prediction.hpp"
#include "rmfgp/simulation.hpp"

namespace rmfgp {

struct CvSettings {
  double window_len = 30.0;
  int k_nearest = 15;
};

struct McSettings {
  int runs = 100;
  std::vector<double> m = {2.0, 5.0, 10.0};
  std::vector<double> eta = {0.1, 0.3, 0.5};
  OutlierMechanism mechanism = OutlierMechanism::additive_sd;
  PredictorKind robust_predictor = PredictorKind::plug_in;
};

struct GridSettings {
  BoundingBox bbox{9.7, 10.15, 53.49, 53.62};
  int n_lon = 50;
  int n_lat = 30;
};

/// Everything a CLI run depends on. Loaded from JSON; unknown keys and
/// ill-typed or out-of-range values are rejected before any computation.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  int threads = 0;
  LossKind loss = LossKind::huber;
  bool center = false;
  DgpConfig dgp;
  HuberConfig huber;
  OptimizerOptions optimizer;
  CvSettings cv;
  McSettings mc;
  GridSettings grid;
  ColumnMapping columns;
  bool aggregate_daily = false;
  std::optional<double> prefilter_max;

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Canonical JSON of the full configuration (stable key order), used for the
/// manifest hash.
std::string to_json(const RunConfig& config);

std::string_view to_string(OutlierMechanism mechanism);
OutlierMechanism parse_mechanism(std::string_view text);
std::string_view to_string(DeltaPolicy policy);
DeltaPolicy parse_delta_policy(std::string_view text);
std::string_view to_string(PredictorKind kind);
PredictorKind parse_predictor(std::string_view text);

/// "50x30" -> (50, 30)
std::pair<int, int> parse_grid_size(std::string_view text);

}  // namespace rmfgp
