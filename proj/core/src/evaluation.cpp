#include "rmfgp/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "rmfgp/error.hpp"

namespace rmfgp {

namespace {

void check_pair(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size()) throw InvalidArgument("prediction and truth lengths differ");
  if (pred.size() == 0) throw InvalidArgument("metrics need at least one value");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << std::setprecision(17);
  return f;
}

}  // namespace

double mae(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  check_pair(pred, truth);
  return (pred - truth).cwiseAbs().mean();
}

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  check_pair(pred, truth);
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

double relative_efficiency(double rmse_classic, double rmse_robust) {
  if (!(rmse_classic > 0.0) || !(rmse_robust > 0.0)) {
    throw InvalidArgument("relative_efficiency: RMSE values must be positive");
  }
  const double r = rmse_classic / rmse_robust;
  return r * r;
}

void parallel_for(int n, int n_threads, const std::function<void(int)>& task) {
  if (n <= 0) return;
  int workers = n_threads > 0 ? n_threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<CVFold> enumerate_folds(const FidelityDataset& data, double window_len,
                                    std::vector<std::string>* skipped, int* n_windows_out) {
  data.validate();
  if (!(window_len > 0.0)) throw InvalidArgument("window length must be positive");
  const std::vector<int> hf_ids = station_ids(data, Fidelity::high);
  if (hf_ids.size() < 2) throw InvalidArgument("block cross-validation needs at least two HF stations");
  if (data.n_lf() + data.n_hf() == 0) throw InvalidArgument("empty dataset");

  double t_min = std::numeric_limits<double>::infinity();
  double t_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : data.lf_points) { t_min = std::min(t_min, p.t); t_max = std::max(t_max, p.t); }
  for (const auto& p : data.hf_points) { t_min = std::min(t_min, p.t); t_max = std::max(t_max, p.t); }
  const int n_windows = static_cast<int>(std::floor((t_max - t_min + 1.0) / window_len + 1e-9));
  if (n_windows < 1) throw InvalidArgument("data span shorter than one window");
  if (n_windows_out) *n_windows_out = n_windows;

  std::vector<CVFold> folds;
  for (int w = 0; w < n_windows; ++w) {
    const double t0 = t_min + w * window_len;
    const double t1 = t0 + window_len;
    auto in_window = [&](double t) { return t >= t0 - 1e-9 && t < t1 - 1e-9; };
    std::vector<std::size_t> lf_rows;
    for (std::size_t i = 0; i < data.n_lf(); ++i) {
      if (in_window(data.lf_points[i].t)) lf_rows.push_back(i);
    }
    for (int s : hf_ids) {
      CVFold f;
      f.window_index = w + 1;
      f.holdout_station = s;
      f.t_begin = t0;
      f.t_end = t1;
      f.train_lf_rows = lf_rows;
      for (std::size_t i = 0; i < data.n_hf(); ++i) {
        if (!in_window(data.hf_points[i].t)) continue;
        if (data.hf_station[i] == s) f.test_rows.push_back(i);
        else f.train_hf_rows.push_back(i);
      }
      if (f.test_rows.empty() || f.train_hf_rows.empty() || f.train_lf_rows.empty()) {
        if (skipped) {
          skipped->push_back("window " + std::to_string(w + 1) + " station " + std::to_string(s) +
                             (f.test_rows.empty() ? ": no test rows" : ": no training rows"));
        }
        continue;
      }
      folds.push_back(std::move(f));
    }
  }
  return folds;
}

namespace {

FidelityDataset fold_training(const FidelityDataset& data, const CVFold& f) {
  std::vector<bool> kl(data.n_lf(), false), kh(data.n_hf(), false);
  for (auto i : f.train_lf_rows) kl[i] = true;
  for (auto i : f.train_hf_rows) kh[i] = true;
  return select_rows(data, kl, kh);
}

}  // namespace

CVReport st_block_cv(const FidelityDataset& data, double window_len, const std::vector<CvModel>& models,
                     int n_threads) {
  if (models.empty()) throw InvalidArgument("st_block_cv: no models");
  CVReport report;
  report.folds = enumerate_folds(data, window_len, &report.skipped, &report.n_windows);
  report.n_hf_stations = static_cast<int>(station_ids(data, Fidelity::high).size());
  const int nf = static_cast<int>(report.folds.size());
  const int nm = static_cast<int>(models.size());
  report.results.resize(static_cast<std::size_t>(nf * nm));

  parallel_for(nf * nm, n_threads, [&](int job) {
    const CVFold& f = report.folds[static_cast<std::size_t>(job / nm)];
    const CvModel& model = models[static_cast<std::size_t>(job % nm)];
    FoldResult r;
    r.window_index = f.window_index;
    r.station = f.holdout_station;
    r.model = model.name;
    r.n_test = static_cast<int>(f.test_rows.size());
    try {
      const FidelityDataset train = fold_training(data, f);
      const ModelParams init = model.init(train);
      FitOptions opts = model.options;
      if (opts.loss == LossKind::huber && !opts.delta_reference) opts.delta_reference = init;
      const FitResult fr = fit(train, init, opts);
      ObservationWeights w;
      if (model.predictor == PredictorKind::huber_weighted) {
        w = huber_observation_weights(train, fr.theta_hat, model.options.huber.c_multiplier);
      }
      std::vector<SpaceTimePoint> q;
      Eigen::VectorXd truth(r.n_test);
      for (std::size_t k = 0; k < f.test_rows.size(); ++k) {
        q.push_back(data.hf_points[f.test_rows[k]]);
        truth[static_cast<Eigen::Index>(k)] = data.hf_values[static_cast<Eigen::Index>(f.test_rows[k])];
      }
      const Prediction p = predict_hf(train, fr.theta_hat, q, w);
      r.mae = mae(p.mean, truth);
      r.rmse = rmse(p.mean, truth);
      r.message = fr.converged ? "" : fr.message;
    } catch (const std::exception& e) {
      r.failed = true;
      r.mae = r.rmse = std::numeric_limits<double>::quiet_NaN();
      r.message = e.what();
    }
    report.results[static_cast<std::size_t>(job)] = r;
  });

  for (int w = 1; w <= report.n_windows; ++w) {
    for (const auto& m : models) {
      WindowSummary s;
      s.window_index = w;
      s.model = m.name;
      for (const auto& r : report.results) {
        if (r.window_index == w && r.model == m.name && !r.failed) {
          s.mae += r.mae;
          s.rmse += r.rmse;
          ++s.n_folds;
        }
      }
      if (s.n_folds > 0) {
        s.mae /= s.n_folds;
        s.rmse /= s.n_folds;
      } else {
        s.mae = s.rmse = std::numeric_limits<double>::quiet_NaN();
      }
      report.windows.push_back(s);
    }
  }
  return report;
}

void write_cv_csv(const CVReport& report, const std::string& path) {
  std::ofstream f = open_out(path);
  f << "window,station,model,mae,rmse,n_test,failed\n";
  for (const auto& r : report.results) {
    f << r.window_index << ',' << r.station << ',' << r.model << ',' << r.mae << ',' << r.rmse << ','
      << r.n_test << ',' << (r.failed ? 1 : 0) << '\n';
  }
}

void write_cv_json(const CVReport& report, const std::string& path) {
  nlohmann::json j;
  j["n_windows"] = report.n_windows;
  j["n_hf_stations"] = report.n_hf_stations;
  j["n_folds"] = report.folds.size();
  j["skipped"] = report.skipped;
  nlohmann::json windows = nlohmann::json::array();
  for (const auto& w : report.windows) {
    windows.push_back({{"window", w.window_index}, {"model", w.model}, {"mae", w.mae}, {"rmse", w.rmse},
                       {"n_folds", w.n_folds}});
  }
  j["windows"] = windows;
  std::map<std::string, std::pair<double, int>> overall;
  for (const auto& r : report.results) {
    if (r.failed) continue;
    auto& o = overall[r.model];
    o.first += r.mae;
    o.second += 1;
  }
  for (const auto& [name, v] : overall) j["mean_fold_mae"][name] = v.first / v.second;
  std::ofstream f = open_out(path);
  f << j.dump(2) << '\n';
}

DescriptiveRow describe(const std::string& group, const std::vector<double>& values) {
  if (values.empty()) throw InvalidArgument("descriptive statistics need a nonempty group: " + group);
  DescriptiveRow r;
  r.group = group;
  r.count = values.size();
  r.min = *std::min_element(values.begin(), values.end());
  r.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(r.count);
  if (r.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    const double sd = std::sqrt(ss / static_cast<double>(r.count - 1));
    r.std_error = sd / std::sqrt(static_cast<double>(r.count));
  } else {
    r.std_error = std::numeric_limits<double>::quiet_NaN();
  }
  r.ci_lower = r.mean - 1.96 * r.std_error;
  r.ci_upper = r.mean + 1.96 * r.std_error;
  return r;
}

std::vector<DescriptiveRow> descriptive_stats(const std::map<std::string, std::vector<double>>& groups) {
  std::vector<DescriptiveRow> rows;
  for (const auto& [name, values] : groups) rows.push_back(describe(name, values));
  return rows;
}

std::vector<std::string> descriptive_headers() {
  return {"Station ID", "Count", "Min", "Max", "Mean", "Std. Error", "95% CI (Lower)", "95% CI (Upper)"};
}

void write_descriptive_csv(const std::vector<DescriptiveRow>& rows, const std::string& path) {
  std::ofstream f = open_out(path);
  const auto h = descriptive_headers();
  for (std::size_t i = 0; i < h.size(); ++i) f << (i ? "," : "") << '"' << h[i] << '"';
  f << '\n';
  for (const auto& r : rows) {
    f << r.group << ',' << r.count << ',' << r.min << ',' << r.max << ',' << r.mean << ',' << r.std_error
      << ',' << r.ci_lower << ',' << r.ci_upper << '\n';
  }
}

}  // namespace rmfgp
