#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmfgp/dataset.hpp"
#include "rmfgp/fit.hpp"
#include "rmfgp/prediction.hpp"

namespace rmfgp {

double mae(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);
double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

/// (rmse_classic / rmse_robust)^2; above 1 means the robust estimator wins.
double relative_efficiency(double rmse_classic, double rmse_robust);

/// A model as used by the cross-validation harness: how to fit, how to pick
/// the starting point from the training data, and how to predict.
struct CvModel {
  std::string name;
  FitOptions options;
  PredictorKind predictor = PredictorKind::plug_in;
  std::function<ModelParams(const FidelityDataset&)> init;
};

struct CVFold {
  int window_index = 0;  // 1-based
  int holdout_station = 0;
  double t_begin = 0.0;
  double t_end = 0.0;    // exclusive
  std::vector<std::size_t> train_lf_rows;
  std::vector<std::size_t> train_hf_rows;
  std::vector<std::size_t> test_rows;  // HF rows of the held-out station
};

struct FoldResult {
  int window_index = 0;
  int station = 0;
  std::string model;
  double mae = 0.0;
  double rmse = 0.0;
  int n_test = 0;
  bool failed = false;
  std::string message;
};

struct WindowSummary {
  int window_index = 0;
  std::string model;
  double mae = 0.0;   // unweighted mean of fold MAEs
  double rmse = 0.0;
  int n_folds = 0;
};

struct CVReport {
  std::vector<CVFold> folds;
  std::vector<FoldResult> results;  // fold-major, models in the given order
  std::vector<WindowSummary> windows;
  std::vector<std::string> skipped;
  int n_windows = 0;
  int n_hf_stations = 0;
};

/// Time is a day index. Windows are [t0 + k L, t0 + (k + 1) L) with t0 the
/// earliest time; only windows completely covered by the data span count, so a
/// partial trailing window is dropped. Folds are window-major with HF station
/// ids ascending. Folds with no test rows are skipped and listed in `skipped`.
std::vector<CVFold> enumerate_folds(const FidelityDataset& data, double window_len,
                                    std::vector<std::string>* skipped = nullptr, int* n_windows = nullptr);

CVReport st_block_cv(const FidelityDataset& data, double window_len, const std::vector<CvModel>& models,
                     int n_threads = 0);

/// Per-fold CSV: window,station,model,mae,rmse,n_test,failed
void write_cv_csv(const CVReport& report, const std::string& path);
void write_cv_json(const CVReport& report, const std::string& path);

struct DescriptiveRow {
  std::string group;
  std::size_t count = 0;
  double min = 0.0, max = 0.0, mean = 0.0;
  double std_error = 0.0;
  double ci_lower = 0.0, ci_upper = 0.0;
};

/// Count, range, mean, standard error sd / sqrt(n) with sample sd, and mean +- 1.96 SE.
DescriptiveRow describe(const std::string& group, const std::vector<double>& values);
std::vector<DescriptiveRow> descriptive_stats(const std::map<std::string, std::vector<double>>& groups);

/// Column headers of the summary table.
std::vector<std::string> descriptive_headers();
void write_descriptive_csv(const std::vector<DescriptiveRow>& rows, const std::string& path);

/// Runs task(i) for i in [0, n) on up to n_threads workers (0: hardware concurrency).
void parallel_for(int n, int n_threads, const std::function<void(int)>& task);

}  // namespace rmfgp
