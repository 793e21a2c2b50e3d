#include "rmfgp/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>

#include "rmfgp/error.hpp"
#include "rmfgp/evaluation.hpp"

namespace rmfgp {

namespace {

Eigen::VectorXd normal_draws(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = z(rng);
  return v;
}

double sample_sd(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
}

bool in_unit_open(double c) { return c > 0.0 && c < 1.0; }

}  // namespace

void DgpConfig::validate() const {
  if (grid_side < 1 || n_times < 1) throw InvalidArgument("DGP grid must have at least one station and time");
  if (!(sigma_L_sq > 0.0) || !(sigma_delta_sq > 0.0) || !(noise_L >= 0.0) || !(noise_delta >= 0.0)) {
    throw InvalidArgument("DGP variances must be positive (noise non-negative)");
  }
  if (!in_unit_open(c_t) || !in_unit_open(c_s_L) || !in_unit_open(c_s_delta)) {
    throw InvalidArgument("DGP correlations must lie in (0, 1)");
  }
  if (!in_unit_open(train_fraction)) throw InvalidArgument("train fraction must lie in (0, 1)");
  if (!(jitter >= 0.0) || !std::isfinite(rho)) throw InvalidArgument("invalid DGP jitter or rho");
}

ModelParams true_params(const DgpConfig& c) {
  c.validate();
  const double lt = lengthscale_from_correlation(c.time_step(), c.c_t);
  const double ll = lengthscale_from_correlation(1.0, c.c_s_L);
  const double ld = lengthscale_from_correlation(1.0, c.c_s_delta);
  ModelParams t;
  t.rho = c.rho;
  t.kernel_L = {c.sigma_L_sq, ll, ll, lt};
  t.kernel_delta = {c.sigma_delta_sq, ld, ld, lt};
  t.tau_L_sq = c.noise_L;
  t.tau_H_sq = c.noise_delta;
  return t;
}

std::vector<SpaceTimePoint> lattice_points(const DgpConfig& c) {
  std::vector<SpaceTimePoint> pts;
  pts.reserve(static_cast<std::size_t>(c.n_stations() * c.n_times));
  for (int i = 0; i < c.grid_side; ++i) {
    for (int j = 0; j < c.grid_side; ++j) {
      for (int k = 0; k < c.n_times; ++k) {
        pts.push_back({static_cast<double>(i), static_cast<double>(j), k * c.time_step()});
      }
    }
  }
  return pts;
}

SimulatedData simulate_mf(const DgpConfig& c) {
  c.validate();
  const ModelParams theta = true_params(c);
  const std::vector<SpaceTimePoint> pts = lattice_points(c);
  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());

  Eigen::MatrixXd kl = separable_gram(pts, theta.kernel_L);
  kl.diagonal().array() += c.jitter;
  Eigen::MatrixXd kd = separable_gram(pts, theta.kernel_delta);
  kd.diagonal().array() += c.jitter;
  const JitteredCholesky cl = jittered_cholesky(kl, std::max(c.jitter, 1e-12));
  const JitteredCholesky cd = jittered_cholesky(kd, std::max(c.jitter, 1e-12));

  std::mt19937_64 rng(c.seed);
  const Eigen::VectorXd zl = normal_draws(rng, n);
  const Eigen::VectorXd zd = normal_draws(rng, n);
  const Eigen::VectorXd el = normal_draws(rng, n) * std::sqrt(c.noise_L);
  const Eigen::VectorXd ed = normal_draws(rng, n) * std::sqrt(c.noise_delta);

  SimulatedData s;
  s.latent_L = cl.llt().matrixL() * zl;
  s.latent_delta = cd.llt().matrixL() * zd;
  s.noise_L = el;
  s.noise_H = ed;
  const Eigen::VectorXd fl = s.latent_L + el;
  const Eigen::VectorXd fh = c.rho * fl + s.latent_delta + ed;

  FidelityDataset& d = s.data;
  d.lf_points = pts;
  d.hf_points = pts;
  d.lf_values = fl;
  d.hf_values = fh;
  for (int st = 0; st < c.n_stations(); ++st) {
    char name[16];
    std::snprintf(name, sizeof(name), "S%02d", st);
    d.station_names.emplace_back(name);
    for (int k = 0; k < c.n_times; ++k) {
      d.lf_station.push_back(st);
      d.hf_station.push_back(st);
    }
  }
  return s;
}

PanelConfig make_panel_config(const BoundingBox& bbox, int n_hf, int n_lf, int n_days, std::uint64_t seed) {
  bbox.validate();
  if (n_hf < 1 || n_lf < 1 || n_days < 1) throw InvalidArgument("panel needs at least one site of each kind and one day");
  PanelConfig c;
  c.seed = seed;
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  std::uniform_real_distribution<double> lon(bbox.lon_min, bbox.lon_max), lat(bbox.lat_min, bbox.lat_max);
  for (int i = 0; i < n_hf; ++i) {
    const double x = lon(rng);
    c.hf_sites.emplace_back(x, lat(rng));
  }
  for (int i = 0; i < n_lf; ++i) {
    const double x = lon(rng);
    c.lf_sites.emplace_back(x, lat(rng));
  }
  for (int d = 0; d < n_days; ++d) c.times.push_back(d);
  const double side = std::min(bbox.lon_max - bbox.lon_min, bbox.lat_max - bbox.lat_min);
  c.theta.rho = 0.6;
  c.theta.kernel_L = {2.0, 0.25 * side, 0.25 * side, 3.0};
  c.theta.kernel_delta = {0.8, 0.5 * side, 0.5 * side, 3.0};
  c.theta.tau_L_sq = 0.3;
  c.theta.tau_H_sq = 0.3;
  return c;
}

SimulatedData simulate_panel(const PanelConfig& c) {
  c.theta.validate();
  if (c.lf_sites.empty() || c.hf_sites.empty() || c.times.empty()) {
    throw InvalidArgument("simulate_panel: need LF sites, HF sites and times");
  }
  const ModelParams& th = c.theta;
  std::vector<std::pair<double, double>> sites = c.lf_sites;
  sites.insert(sites.end(), c.hf_sites.begin(), c.hf_sites.end());
  const Eigen::Index ns = static_cast<Eigen::Index>(sites.size());
  const Eigen::Index nhs = static_cast<Eigen::Index>(c.hf_sites.size());
  const Eigen::Index nt = static_cast<Eigen::Index>(c.times.size());

  auto spatial = [&](const std::vector<std::pair<double, double>>& s, const KernelParams& k) {
    const Eigen::Index m = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd g(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const AxisSqDistance d = axis_sq_distance({s[i].first, s[i].second, 0.0}, {s[j].first, s[j].second, 0.0});
        g(i, j) = spatial_correlation(d, k);
      }
    }
    return g;
  };
  auto temporal = [&](const KernelParams& k) {
    Eigen::MatrixXd g(nt, nt);
    for (Eigen::Index i = 0; i < nt; ++i) {
      for (Eigen::Index j = 0; j < nt; ++j) {
        const double dt = c.times[static_cast<std::size_t>(i)] - c.times[static_cast<std::size_t>(j)];
        g(i, j) = temporal_correlation({0.0, 0.0, dt * dt}, k);
      }
    }
    return g;
  };
  const double eps = std::max(c.jitter, 1e-12);
  const Eigen::MatrixXd ls = jittered_cholesky(spatial(sites, th.kernel_L), eps).lower();
  const Eigen::MatrixXd lt = jittered_cholesky(temporal(th.kernel_L), eps).lower();
  const Eigen::MatrixXd lds = jittered_cholesky(spatial(c.hf_sites, th.kernel_delta), eps).lower();
  const Eigen::MatrixXd ldt = jittered_cholesky(temporal(th.kernel_delta), eps).lower();

  std::mt19937_64 rng(c.seed);
  // Station-major vectorization: field(s, t) at index s * nt + t, so (L_s kron L_t) z = L_t Z L_s^T.
  const Eigen::VectorXd zl_flat = normal_draws(rng, ns * nt);
  const Eigen::VectorXd zd_flat = normal_draws(rng, nhs * nt);
  const Eigen::Map<const Eigen::MatrixXd> zl(zl_flat.data(), nt, ns);
  const Eigen::Map<const Eigen::MatrixXd> zd(zd_flat.data(), nt, nhs);
  const Eigen::MatrixXd dl = std::sqrt(th.kernel_L.signal_variance) * (lt * zl * ls.transpose());
  const Eigen::MatrixXd dd = std::sqrt(th.kernel_delta.signal_variance) * (ldt * zd * lds.transpose());
  const Eigen::VectorXd el = normal_draws(rng, ns * nt) * std::sqrt(th.tau_L_sq);
  const Eigen::VectorXd ed = normal_draws(rng, nhs * nt) * std::sqrt(th.tau_H_sq);

  SimulatedData out;
  out.latent_L = Eigen::Map<const Eigen::VectorXd>(dl.data(), ns * nt);
  out.latent_delta = Eigen::Map<const Eigen::VectorXd>(dd.data(), nhs * nt);
  out.noise_L = el;
  out.noise_H = ed;
  const Eigen::VectorXd fl = out.latent_L + el;

  FidelityDataset& d = out.data;
  const Eigen::Index nls = static_cast<Eigen::Index>(c.lf_sites.size());
  d.lf_values.resize(nls * nt);
  d.hf_values.resize(nhs * nt);
  for (Eigen::Index s = 0; s < ns; ++s) {
    char name[16];
    std::snprintf(name, sizeof(name), s < nls ? "LF%02d" : "HF%02d", static_cast<int>(s < nls ? s : s - nls));
    d.station_names.emplace_back(name);
    for (Eigen::Index t = 0; t < nt; ++t) {
      const SpaceTimePoint p{sites[static_cast<std::size_t>(s)].first, sites[static_cast<std::size_t>(s)].second,
                             c.times[static_cast<std::size_t>(t)]};
      const Eigen::Index row = s * nt + t;
      if (s < nls) {
        d.lf_points.push_back(p);
        d.lf_station.push_back(static_cast<int>(s));
        d.lf_values[row] = fl[row];
      } else {
        const Eigen::Index h = (s - nls) * nt + t;
        d.hf_points.push_back(p);
        d.hf_station.push_back(static_cast<int>(s));
        d.hf_values[h] = th.rho * (fl[row] + th.mu_L) + th.mu_delta + out.latent_delta[h] + ed[h];
      }
    }
  }
  d.lf_values.array() += th.mu_L;
  return out;
}

void ContaminationSpec::validate() const {
  if (!std::isfinite(magnitude)) throw InvalidArgument("contamination magnitude must be finite");
  if (kind == Kind::outlier) {
    if (magnitude < 0.0) throw InvalidArgument("outlier magnitude must be non-negative");
    if (!(frequency >= 0.0 && frequency <= 1.0)) throw InvalidArgument("outlier frequency must lie in [0, 1]");
  } else {
    if (stations.empty()) throw InvalidArgument("level shift needs at least one station");
    if (!std::isfinite(changepoint)) throw InvalidArgument("level shift change point must be finite");
  }
}

Contaminated inject_outliers(const FidelityDataset& data, double m, double eta, std::uint64_t seed,
                             OutlierMechanism mechanism) {
  ContaminationSpec spec;
  spec.magnitude = m;
  spec.frequency = eta;
  spec.validate();
  data.validate();
  Contaminated out{data, std::vector<bool>(data.n_lf(), false), sample_sd(data.lf_values)};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::student_t_distribution<double> t3(3.0);
  for (std::size_t i = 0; i < data.n_lf(); ++i) {
    const double pick = u(rng);
    const double sign = u(rng) < 0.5 ? -1.0 : 1.0;
    const double heavy = t3(rng);
    if (!(pick < eta)) continue;
    const auto k = static_cast<Eigen::Index>(i);
    double& v = out.data.lf_values[k];
    switch (mechanism) {
      case OutlierMechanism::additive_sd:
        v += sign * m * out.scale;
        break;
      case OutlierMechanism::multiplicative:
        v += sign * m * std::abs(v);
        break;
      case OutlierMechanism::student_t:
        v += m * out.scale * heavy;
        break;
    }
    out.mask[i] = true;
  }
  return out;
}

Contaminated inject_level_shift(const FidelityDataset& data, double delta, double tau,
                                const std::vector<int>& stations, std::uint64_t seed) {
  ContaminationSpec spec;
  spec.kind = ContaminationSpec::Kind::level_shift;
  spec.magnitude = delta;
  spec.changepoint = tau;
  spec.stations = stations;
  spec.seed = seed;
  spec.validate();
  data.validate();
  Contaminated out{data, std::vector<bool>(data.n_lf(), false), sample_sd(data.lf_values)};
  for (std::size_t i = 0; i < data.n_lf(); ++i) {
    const bool hit = std::find(stations.begin(), stations.end(), data.lf_station[i]) != stations.end();
    if (hit && data.lf_points[i].t > tau) {
      out.data.lf_values[static_cast<Eigen::Index>(i)] += delta;
      out.mask[i] = true;
    }
  }
  return out;
}

Contaminated apply_contamination(const FidelityDataset& data, const ContaminationSpec& spec) {
  spec.validate();
  if (spec.kind == ContaminationSpec::Kind::outlier) {
    return inject_outliers(data, spec.magnitude, spec.frequency, spec.seed, spec.mechanism);
  }
  return inject_level_shift(data, spec.magnitude, spec.changepoint, spec.stations, spec.seed);
}

StationSplit station_split(const std::vector<int>& stations, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("split fraction must lie in (0, 1)");
  std::vector<int> ids = stations;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const auto n = ids.size();
  const auto n_train = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  if (n_train == 0 || n_train >= n) {
    throw InvalidArgument("split fraction leaves an empty train or test set");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(ids[i], ids[pick(rng)]);
  }
  StationSplit s;
  s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

StationSplit station_split(const FidelityDataset& data, double fraction, std::uint64_t seed) {
  return station_split(station_ids(data, Fidelity::high), fraction, seed);
}

McConfig::McConfig() {
  dgp.train_fraction = 0.8;
  huber.loss = LossKind::huber;
}

std::vector<ReplicationResult> run_replication(const McConfig& config, int scenario_index, int rep) {
  const Scenario sc = config.scenarios.at(static_cast<std::size_t>(scenario_index));
  const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(rep);
  std::vector<ReplicationResult> out(2);
  out[0].estimator = "classical";
  out[1].estimator = "robust";
  for (auto& r : out) {
    r.scenario = scenario_index;
    r.rep = rep;
    r.seed = seed;
  }
  try {
    DgpConfig dgp = config.dgp;
    dgp.seed = seed;
    const SimulatedData sim = simulate_mf(dgp);
    const StationSplit split = station_split(sim.data, dgp.train_fraction, seed);
    const Contaminated cont = inject_outliers(sim.data, sc.m, sc.eta, seed ^ 0x9e3779b97f4a7c15ULL,
                                              config.mechanism);
    const FidelityDataset train = drop_hf_stations(cont.data, split.test);
    const FidelityDataset test = hf_rows_of(sim.data, split.test);
    const ModelParams init = true_params(dgp);

    for (int e = 0; e < 2; ++e) {
      ReplicationResult& r = out[static_cast<std::size_t>(e)];
      try {
        FitOptions opts = e == 0 ? config.gaussian : config.huber;
        if (opts.loss == LossKind::huber && !opts.delta_reference) opts.delta_reference = init;
        const FitResult fr = fit(train, init, opts);
        ObservationWeights w;
        if (e == 1 && config.robust_predictor == PredictorKind::huber_weighted) {
          w = huber_observation_weights(train, fr.theta_hat, opts.huber.c_multiplier);
        }
        const Prediction p = predict_hf(train, fr.theta_hat, test.hf_points, w);
        r.mae = mae(p.mean, test.hf_values);
        r.rmse = rmse(p.mean, test.hf_values);
        r.rho_hat = fr.theta_hat.rho;
        r.converged = fr.converged;
      } catch (const std::exception& ex) {
        r.failed = true;
        r.failure = ex.what();
      }
    }
  } catch (const std::exception& ex) {
    for (auto& r : out) {
      r.failed = true;
      r.failure = ex.what();
    }
  }
  return out;
}

namespace {

EstimatorSummary summarize(const std::vector<const ReplicationResult*>& rs) {
  EstimatorSummary s;
  std::vector<double> mae_v, rmse_v, rho_v;
  for (const auto* r : rs) {
    if (r->failed) {
      ++s.n_failed;
      continue;
    }
    if (!r->converged) ++s.n_not_converged;
    mae_v.push_back(r->mae);
    rmse_v.push_back(r->rmse);
    rho_v.push_back(r->rho_hat);
  }
  s.n_ok = static_cast<int>(mae_v.size());
  auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
    if (v.empty()) return;
    double sum = 0.0;
    for (double x : v) sum += x;
    mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
  };
  mean_se(mae_v, s.mae, s.mae_se);
  mean_se(rmse_v, s.rmse, s.rmse_se);
  mean_se(rho_v, s.rho_mean, s.rho_se);
  return s;
}

}  // namespace

McReport run_mc_study(const McConfig& config, const std::function<void(int, int)>& progress) {
  if (config.scenarios.empty()) throw InvalidArgument("Monte Carlo study needs at least one scenario");
  if (config.n_runs < 1) throw InvalidArgument("Monte Carlo study needs at least one run");
  config.dgp.validate();
  const int ns = static_cast<int>(config.scenarios.size());
  const int total = ns * config.n_runs;
  std::vector<std::vector<ReplicationResult>> results(static_cast<std::size_t>(total));
  std::mutex progress_mutex;
  int done = 0;
  parallel_for(total, config.n_threads, [&](int job) {
    results[static_cast<std::size_t>(job)] = run_replication(config, job / config.n_runs, job % config.n_runs);
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(++done, total);
    }
  });

  McReport report;
  for (const auto& v : results) report.ledger.insert(report.ledger.end(), v.begin(), v.end());
  for (int s = 0; s < ns; ++s) {
    std::vector<const ReplicationResult*> cl, rb;
    for (const auto& r : report.ledger) {
      if (r.scenario != s) continue;
      (r.estimator == "classical" ? cl : rb).push_back(&r);
    }
    ScenarioReport cell;
    cell.scenario = config.scenarios[static_cast<std::size_t>(s)];
    cell.classical = summarize(cl);
    cell.robust = summarize(rb);
    if (cell.classical.n_ok == 0 || cell.robust.n_ok == 0) {
      throw Error("every replication failed in scenario m=" + std::to_string(cell.scenario.m) +
                  " eta=" + std::to_string(cell.scenario.eta));
    }
    cell.relative_efficiency = relative_efficiency(cell.classical.rmse, cell.robust.rmse);
    report.cells.push_back(cell);
  }
  return report;
}

void write_mc_ledger(const McReport& report, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << std::setprecision(17);
  f << "scenario,m,eta,rep,seed,estimator,mae,rmse,rho_hat,converged,failed,reason\n";
  for (const auto& r : report.ledger) {
    const Scenario& sc = report.cells.at(static_cast<std::size_t>(r.scenario)).scenario;
    std::string reason = r.failure;
    std::replace(reason.begin(), reason.end(), ',', ';');
    std::replace(reason.begin(), reason.end(), '\n', ' ');
    f << r.scenario << ',' << sc.m << ',' << sc.eta << ',' << r.rep << ',' << r.seed << ',' << r.estimator
      << ',' << r.mae << ',' << r.rmse << ',' << r.rho_hat << ',' << (r.converged ? 1 : 0) << ','
      << (r.failed ? 1 : 0) << ',' << reason << '\n';
  }
}

void write_mc_summary(const McReport& report, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << std::setprecision(10);
  f << "m,eta,classical_mae,classical_rmse,robust_mae,robust_rmse,eff_rel,classical_rmse_se,robust_rmse_se,"
       "classical_rho,robust_rho,classical_failed,robust_failed\n";
  for (const auto& c : report.cells) {
    f << c.scenario.m << ',' << c.scenario.eta << ',' << c.classical.mae << ',' << c.classical.rmse << ','
      << c.robust.mae << ',' << c.robust.rmse << ',' << c.relative_efficiency << ',' << c.classical.rmse_se
      << ',' << c.robust.rmse_se << ',' << c.classical.rho_mean << ',' << c.robust.rho_mean << ','
      << c.classical.n_failed << ',' << c.robust.n_failed << '\n';
  }
}

}  // namespace rmfgp
