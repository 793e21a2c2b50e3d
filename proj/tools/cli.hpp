#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmfgp/config.hpp"
#include "rmfgp/io.hpp"

namespace rmfgp::cli {

/// Flags shared by every subcommand. Values given on the command line
/// override the config file, which overrides the built-in defaults.
struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> loss;
  std::optional<std::string> whitening;
  std::optional<double> c_mult;
  std::optional<std::string> bbox;
  /// "NxM" grid resolution; entries of the form axis=v1,v2 are Monte Carlo grid axes.
  std::vector<std::string> grid;
  std::optional<double> window_len;
  std::optional<int> k_nearest;
  std::optional<double> prefilter;
  std::optional<std::string> columns;
  std::optional<int> threads;
  bool center = false;
  bool aggregate_daily = false;
};

struct SimulateFlags {
  int panel_days = 0;
  int panel_hf = 4;
  int panel_lf = 6;
};

struct ContaminateFlags {
  std::string input;
  std::string kind = "outlier";
  double m = 10.0;
  double eta = 0.1;
  double changepoint = 0.0;
  std::vector<int> stations;
  std::string mechanism = "additive";
};

struct FitFlags {
  std::string input;
  std::string init;  // params JSON, "truth" or empty for the data-driven start
};

struct PredictFlags {
  std::string input;
  std::string params;
  std::string points;
  std::vector<double> times;
  std::string predictor = "plug_in";
};

struct CvFlags {
  std::string input;
  std::string predictor = "plug_in";
};

struct McFlags {
  std::vector<std::string> grid;
  std::optional<int> runs;
  std::optional<std::string> mechanism;
  std::optional<std::string> predictor;
};

struct TheoryFlags {
  double m = 10.0;
  double eta = 0.1;
  std::vector<double> scales = {1.0, 10.0, 100.0};
};

struct StatsFlags {
  std::string input;
  std::string by = "type";
};

/// Resolved configuration plus the arguments that produced it.
struct Context {
  RunConfig config;
  std::vector<std::string> argv;
  std::string command;
};

Context resolve(const CommonFlags& flags, const std::string& command, const std::vector<std::string>& argv);

void run_simulate(const Context& ctx, const SimulateFlags& f);
void run_contaminate(const Context& ctx, const ContaminateFlags& f);
void run_fit(const Context& ctx, const FitFlags& f);
void run_predict(const Context& ctx, const PredictFlags& f);
void run_cv(const Context& ctx, const CvFlags& f);
void run_mc(const Context& ctx, const McFlags& f);
void run_theory(const Context& ctx, const TheoryFlags& f);
void run_stats(const Context& ctx, const StatsFlags& f);

}  // namespace rmfgp::cli
