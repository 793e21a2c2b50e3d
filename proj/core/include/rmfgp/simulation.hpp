#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rmfgp/covariance.hpp"
#include "rmfgp/dataset.hpp"
#include "rmfgp/fit.hpp"
#include "rmfgp/prediction.hpp"

namespace rmfgp {

/// Separable two-fidelity generator on a square lattice of stations with unit
/// spacing and equispaced times on [0, 1].
struct DgpConfig {
  int grid_side = 4;
  int n_times = 15;
  double sigma_L_sq = 2.0;
  double sigma_delta_sq = 0.8;
  double noise_L = 0.3;      // LF noise variance
  double noise_delta = 0.3;  // HF noise variance
  double rho = 0.6;
  double c_t = 0.8;
  double c_s_L = 0.8;
  double c_s_delta = 0.95;
  double jitter = 1e-8;
  double train_fraction = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
  int n_stations() const { return grid_side * grid_side; }
  double time_step() const { return n_times > 1 ? 1.0 / (n_times - 1) : 1.0; }
};

/// Parameters of the generator expressed as model parameters (zero means).
ModelParams true_params(const DgpConfig& config);

/// Station-major lattice points (time varying fastest).
std::vector<SpaceTimePoint> lattice_points(const DgpConfig& config);

struct SimulatedData {
  FidelityDataset data;         // LF and HF observed at every lattice point
  Eigen::VectorXd latent_L;     // d_L
  Eigen::VectorXd latent_delta; // d_delta
  Eigen::VectorXd noise_L;      // LF noise draws
  Eigen::VectorXd noise_H;      // HF noise draws
};

/// d_L ~ N(0, K_L + eps I), d_delta ~ N(0, K_delta + eps I), f_L = d_L + e_L,
/// f_H = rho f_L + d_delta + e_delta.
SimulatedData simulate_mf(const DgpConfig& config);

/// Same generator on arbitrary station coordinates and times. Stations in
/// `lf_sites` carry LF observations, those in `hf_sites` HF observations. The
/// LF process is drawn jointly over both site sets through Kronecker factors.
struct PanelConfig {
  std::vector<std::pair<double, double>> lf_sites;
  std::vector<std::pair<double, double>> hf_sites;
  std::vector<double> times;
  ModelParams theta;
  double jitter = 1e-8;
  std::uint64_t seed = 1;
};

SimulatedData simulate_panel(const PanelConfig& config);

/// Daily panel with uniformly placed sites in `bbox` and times 0..n_days-1.
/// Parameters mirror the lattice generator: rho 0.6, variances 2.0 and 0.8,
/// noise 0.3, spatial length-scales of a quarter (LF) and half (discrepancy)
/// of the smaller box side, temporal length-scale of three days.
PanelConfig make_panel_config(const BoundingBox& bbox, int n_hf, int n_lf, int n_days, std::uint64_t seed);

enum class OutlierMechanism { additive_sd, multiplicative, student_t };

struct ContaminationSpec {
  enum class Kind { outlier, level_shift };
  Kind kind = Kind::outlier;
  double magnitude = 0.0;   // m for outliers, shift size for level shifts
  double frequency = 0.0;   // eta
  double changepoint = 0.0; // tau (level shift only)
  std::vector<int> stations;
  std::uint64_t seed = 1;
  OutlierMechanism mechanism = OutlierMechanism::additive_sd;

  void validate() const;
};

struct Contaminated {
  FidelityDataset data;
  std::vector<bool> mask;  // LF rows that were perturbed
  double scale = 0.0;      // sd(f_L) used to size outliers
};

/// Each LF row is independently perturbed with probability eta. The default
/// mechanism adds +-m * sd(f_L) with an equiprobable sign.
Contaminated inject_outliers(const FidelityDataset& data, double m, double eta, std::uint64_t seed,
                             OutlierMechanism mechanism = OutlierMechanism::additive_sd);

/// Adds `delta` to LF rows of the listed stations with t > tau.
Contaminated inject_level_shift(const FidelityDataset& data, double delta, double tau,
                                const std::vector<int>& stations, std::uint64_t seed = 0);

Contaminated apply_contamination(const FidelityDataset& data, const ContaminationSpec& spec);

struct StationSplit {
  std::vector<int> train;
  std::vector<int> test;
};

/// Uniform split of the given station ids; floor(fraction * n) go to train.
StationSplit station_split(const std::vector<int>& stations, double fraction, std::uint64_t seed);
StationSplit station_split(const FidelityDataset& data, double fraction, std::uint64_t seed);

struct Scenario {
  double m = 0.0;
  double eta = 0.0;
};

struct McConfig {
  DgpConfig dgp;
  std::vector<Scenario> scenarios;
  int n_runs = 100;
  std::uint64_t base_seed = 1;
  FitOptions gaussian;
  FitOptions huber;
  PredictorKind robust_predictor = PredictorKind::plug_in;
  int n_threads = 0;  // 0: hardware concurrency
  OutlierMechanism mechanism = OutlierMechanism::additive_sd;

  McConfig();
};

struct ReplicationResult {
  int scenario = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  std::string estimator;
  double mae = 0.0;
  double rmse = 0.0;
  double rho_hat = 0.0;
  bool converged = false;
  bool failed = false;
  std::string failure;
};

struct EstimatorSummary {
  double mae = 0.0, rmse = 0.0, mae_se = 0.0, rmse_se = 0.0;
  double rho_mean = 0.0, rho_se = 0.0;
  int n_ok = 0, n_failed = 0, n_not_converged = 0;
};

struct ScenarioReport {
  Scenario scenario;
  EstimatorSummary classical;
  EstimatorSummary robust;
  double relative_efficiency = 0.0;
};

struct McReport {
  std::vector<ScenarioReport> cells;
  std::vector<ReplicationResult> ledger;
};

/// One replication of one scenario: simulate with seed base_seed + rep, split
/// stations, contaminate LF, fit both estimators from the true parameters and
/// score HF predictions at the held-out stations.
std::vector<ReplicationResult> run_replication(const McConfig& config, int scenario_index, int rep);

/// Throws Error if every replication of some cell fails.
McReport run_mc_study(const McConfig& config,
                      const std::function<void(int done, int total)>& progress = {});

void write_mc_ledger(const McReport& report, const std::string& path);
void write_mc_summary(const McReport& report, const std::string& path);

}  // namespace rmfgp
