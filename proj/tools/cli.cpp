#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "rmfgp/error.hpp"
#include "rmfgp/evaluation.hpp"
#include "rmfgp/fit.hpp"
#include "rmfgp/prediction.hpp"
#include "rmfgp/simulation.hpp"
#include "rmfgp/theory.hpp"

namespace rmfgp::cli {

namespace {

using nlohmann::json;

std::string out_path(const Context& ctx, const std::string& name) {
  std::filesystem::create_directories(ctx.config.out_dir);
  return (std::filesystem::path(ctx.config.out_dir) / name).string();
}

void finish(const Context& ctx, const std::map<std::string, std::string>& outputs,
            const std::map<std::string, std::string>& extra = {}) {
  RunManifest m;
  m.command = ctx.command;
  m.argv = ctx.argv;
  m.config_text = to_json(ctx.config);
  m.seed = ctx.config.seed;
  m.outputs = outputs;
  m.extra = extra;
  const std::string path = out_path(ctx, ctx.command + "_manifest.json");
  write_manifest(m, path);
  json summary{{"command", ctx.command}, {"manifest", path}, {"outputs", outputs}};
  for (const auto& [k, v] : extra) summary[k] = v;
  std::cout << summary.dump() << '\n';
}

void write_json(const json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << j.dump(2) << '\n';
  if (!f) throw IoError("write failed for '" + path + "'");
}

IngestOptions ingest_options(const RunConfig& c) {
  IngestOptions o;
  o.mapping = c.columns;
  o.aggregate_daily = c.aggregate_daily;
  o.prefilter_max = c.prefilter_max;
  return o;
}

json report_json(const IngestReport& r) {
  return json{{"rows", r.n_rows},         {"valid", r.n_valid},       {"skipped", r.n_skipped},
              {"sentinel", r.n_sentinel}, {"prefiltered", r.n_prefiltered}, {"outside_bbox", r.n_outside_bbox},
              {"skip_reasons", r.skip_reasons}, {"origin", r.origin}};
}

FitOptions fit_options(const RunConfig& c, LossKind loss) {
  FitOptions o;
  o.loss = loss;
  o.huber = c.huber;
  o.optimizer = c.optimizer;
  o.center = c.center;
  return o;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InvalidArgument("'" + text + "' is not a comma separated number list");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("empty number list");
  return out;
}

}  // namespace

Context resolve(const CommonFlags& f, const std::string& command, const std::vector<std::string>& argv) {
  Context ctx;
  ctx.command = command;
  ctx.argv = argv;
  RunConfig& c = ctx.config;
  if (!f.config_path.empty()) c = load_run_config(f.config_path);
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out_dir = *f.out;
  if (f.loss) c.loss = parse_loss(*f.loss);
  if (f.whitening) c.huber.whitening = WhiteningMode::parse(*f.whitening);
  if (f.c_mult) c.huber.c_multiplier = *f.c_mult;
  if (f.bbox) c.grid.bbox = BoundingBox::parse(*f.bbox);
  for (const std::string& g : f.grid) {
    if (g.find('=') != std::string::npos) continue;
    const auto [a, b] = parse_grid_size(g);
    c.grid.n_lon = a;
    c.grid.n_lat = b;
  }
  if (f.window_len) c.cv.window_len = *f.window_len;
  if (f.k_nearest) c.cv.k_nearest = *f.k_nearest;
  if (f.prefilter) c.prefilter_max = *f.prefilter;
  if (f.columns) c.columns = ColumnMapping::parse(*f.columns);
  if (f.threads) c.threads = *f.threads;
  if (f.center) c.center = true;
  if (f.aggregate_daily) c.aggregate_daily = true;
  c.dgp.seed = c.seed;
  c.validate();
  return ctx;
}

void run_simulate(const Context& ctx, const SimulateFlags& f) {
  const RunConfig& c = ctx.config;
  SimulatedData sim;
  ModelParams truth;
  if (f.panel_days > 0) {
    const PanelConfig pc = make_panel_config(c.grid.bbox, f.panel_hf, f.panel_lf, f.panel_days, c.seed);
    sim = simulate_panel(pc);
    truth = pc.theta;
  } else {
    sim = simulate_mf(c.dgp);
    truth = true_params(c.dgp);
  }
  const std::string data_path = out_path(ctx, "dataset.csv");
  const std::string truth_path = out_path(ctx, "truth.json");
  write_dataset_csv(sim.data, data_path);
  write_params_json(truth, truth_path);
  finish(ctx, {{"dataset", data_path}, {"truth", truth_path}},
         {{"n_lf", std::to_string(sim.data.n_lf())}, {"n_hf", std::to_string(sim.data.n_hf())}});
}

void run_contaminate(const Context& ctx, const ContaminateFlags& f) {
  const Ingested in = read_station_csv(f.input, ingest_options(ctx.config));
  ContaminationSpec spec;
  if (f.kind == "outlier") {
    spec.kind = ContaminationSpec::Kind::outlier;
  } else if (f.kind == "shift") {
    spec.kind = ContaminationSpec::Kind::level_shift;
  } else {
    throw InvalidArgument("unknown contamination kind '" + f.kind + "' (outlier|shift)");
  }
  spec.magnitude = f.m;
  spec.frequency = f.eta;
  spec.changepoint = f.changepoint;
  spec.stations = f.stations;
  spec.seed = ctx.config.seed;
  spec.mechanism = parse_mechanism(f.mechanism);
  const Contaminated out = apply_contamination(in.dataset, spec);

  const std::string data_path = out_path(ctx, "contaminated.csv");
  const std::string mask_path = out_path(ctx, "mask.csv");
  write_dataset_csv(out.data, data_path);
  std::ofstream mask(mask_path);
  if (!mask) throw IoError("cannot open '" + mask_path + "' for writing");
  mask << "lf_row,contaminated\n";
  std::size_t n = 0;
  for (std::size_t i = 0; i < out.mask.size(); ++i) {
    mask << i << ',' << (out.mask[i] ? 1 : 0) << '\n';
    n += out.mask[i] ? 1 : 0;
  }
  finish(ctx, {{"dataset", data_path}, {"mask", mask_path}},
         {{"n_contaminated", std::to_string(n)}, {"scale", fmt(out.scale)}});
}

void run_fit(const Context& ctx, const FitFlags& f) {
  const RunConfig& c = ctx.config;
  const Ingested in = read_station_csv(f.input, ingest_options(c));
  ModelParams init;
  if (f.init.empty()) {
    init = heuristic_init(in.dataset);
  } else if (f.init == "truth") {
    init = true_params(c.dgp);
  } else {
    init = read_params_json(f.init);
  }
  const FitResult r = fit(in.dataset, init, fit_options(c, c.loss));
  const std::string params_path = out_path(ctx, "params.json");
  const std::string report_path = out_path(ctx, "fit.json");
  write_params_json(r.theta_hat, params_path);
  write_json(json{{"loss", std::string(to_string(c.loss))},
                  {"objective", r.objective},
                  {"n_iter", r.n_iter},
                  {"n_eval", r.n_eval},
                  {"converged", r.converged},
                  {"delta_used", std::isfinite(r.delta_used) ? json(r.delta_used) : json(nullptr)},
                  {"jitter_used", r.jitter_used},
                  {"message", r.message},
                  {"ingest", report_json(in.report)},
                  {"theta", json::parse(params_to_json(r.theta_hat))}},
             report_path);
  finish(ctx, {{"params", params_path}, {"report", report_path}},
         {{"converged", r.converged ? "true" : "false"}, {"objective", fmt(r.objective)}});
}

void run_predict(const Context& ctx, const PredictFlags& f) {
  const RunConfig& c = ctx.config;
  const Ingested in = read_station_csv(f.input, ingest_options(c));
  const ModelParams theta = read_params_json(f.params);
  ObservationWeights w;
  if (parse_predictor(f.predictor) == PredictorKind::huber_weighted) {
    w = huber_observation_weights(in.dataset, theta, c.huber.c_multiplier);
  }
  if (!f.points.empty()) {
    const std::vector<SpaceTimePoint> q = read_points_csv(f.points);
    const Prediction p = predict_hf(in.dataset, theta, q, w);
    const std::string path = out_path(ctx, "predictions.csv");
    write_prediction_csv(p, path);
    finish(ctx, {{"predictions", path}}, {{"n_clamped", std::to_string(p.n_clamped)}});
    return;
  }
  std::vector<double> times = f.times;
  if (times.empty()) {
    for (const auto& p : in.dataset.hf_points) times.push_back(p.t);
    for (const auto& p : in.dataset.lf_points) times.push_back(p.t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
  }
  const GridPrediction g = krige_grid(in.dataset, theta, c.grid.bbox, c.grid.n_lon, c.grid.n_lat, times, w);
  const std::string grid_path = out_path(ctx, "grid.csv");
  const std::string summary_path = out_path(ctx, "grid_summary.csv");
  write_grid_csv(g, grid_path);
  write_grid_summary_csv(g, summary_path);
  finish(ctx, {{"grid", grid_path}, {"summary", summary_path}},
         {{"cells", std::to_string(g.cells.size())}, {"times", std::to_string(times.size())}});
}

void run_cv(const Context& ctx, const CvFlags& f) {
  const RunConfig& c = ctx.config;
  IngestOptions opts = ingest_options(c);
  const Ingested in = read_station_csv(f.input, opts);
  const std::vector<Site> hf = dataset_sites(in.dataset, Fidelity::high);
  const std::vector<Site> lf = dataset_sites(in.dataset, Fidelity::low);
  const std::vector<Site> chosen = nearest_lf_selection(hf, lf, c.cv.k_nearest);
  const FidelityDataset data = keep_lf_sites(in.dataset, chosen);

  const PredictorKind robust_predictor = parse_predictor(f.predictor);
  std::vector<CvModel> models(2);
  models[0] = {"classical", fit_options(c, LossKind::gaussian), PredictorKind::plug_in, heuristic_init};
  models[1] = {"robust", fit_options(c, LossKind::huber), robust_predictor, heuristic_init};
  const CVReport rep = st_block_cv(data, c.cv.window_len, models, c.threads);

  const std::string csv = out_path(ctx, "cv_folds.csv");
  const std::string js = out_path(ctx, "cv_summary.json");
  write_cv_csv(rep, csv);
  write_cv_json(rep, js);
  finish(ctx, {{"folds", csv}, {"summary", js}},
         {{"n_folds", std::to_string(rep.folds.size())}, {"n_windows", std::to_string(rep.n_windows)},
          {"lf_sites", std::to_string(chosen.size())}});
}

void run_mc(const Context& ctx, const McFlags& f) {
  const RunConfig& c = ctx.config;
  std::vector<double> ms = c.mc.m, etas = c.mc.eta;
  for (const std::string& g : f.grid) {
    if (g.find('=') == std::string::npos) continue;
    const auto eq = g.find('=');
    if (eq == std::string::npos) throw InvalidArgument("grid entry '" + g + "' must look like m=2,5,10 or eta=0.1,0.3");
    const std::string key = g.substr(0, eq);
    if (key == "m") ms = parse_list(g.substr(eq + 1));
    else if (key == "eta") etas = parse_list(g.substr(eq + 1));
    else throw InvalidArgument("unknown grid axis '" + key + "' (m|eta)");
  }
  McConfig mc;
  mc.dgp = c.dgp;
  mc.dgp.train_fraction = 0.8;
  mc.n_runs = f.runs.value_or(c.mc.runs);
  mc.base_seed = c.seed;
  mc.gaussian = fit_options(c, LossKind::gaussian);
  mc.huber = fit_options(c, LossKind::huber);
  mc.mechanism = f.mechanism ? parse_mechanism(*f.mechanism) : c.mc.mechanism;
  mc.robust_predictor = f.predictor ? parse_predictor(*f.predictor) : c.mc.robust_predictor;
  mc.n_threads = c.threads;
  for (const double m : ms) {
    for (const double e : etas) mc.scenarios.push_back({m, e});
  }
  const McReport rep = run_mc_study(mc, [](int done, int total) {
    std::cerr << "\rreplications " << done << '/' << total << std::flush;
    if (done == total) std::cerr << '\n';
  });
  const std::string ledger = out_path(ctx, "mc_ledger.csv");
  const std::string summary = out_path(ctx, "mc_summary.csv");
  write_mc_ledger(rep, ledger);
  write_mc_summary(rep, summary);
  finish(ctx, {{"ledger", ledger}, {"summary", summary}},
         {{"cells", std::to_string(rep.cells.size())}, {"runs", std::to_string(mc.n_runs)}});
}

void run_theory(const Context& ctx, const TheoryFlags& f) {
  const RunConfig& c = ctx.config;
  const SimulatedData sim = simulate_mf(c.dgp);
  const ModelParams theta = true_params(c.dgp);
  const FidelityDataset& clean = sim.data;

  ContaminationSpec base;
  base.frequency = f.eta;
  base.seed = c.seed ^ 0x9e3779b97f4a7c15ULL;
  base.mechanism = c.mc.mechanism;
  std::vector<double> mags;
  for (const double s : f.scales) mags.push_back(f.m * s);

  const InfluenceCurve g = influence_curve(clean, theta, base, mags, EstimatorKind::gaussian, c.huber);
  const InfluenceCurve h = influence_curve(clean, theta, base, mags, EstimatorKind::huber, c.huber);

  std::vector<BoundReport> bounds;
  for (const double m : mags) {
    ContaminationSpec spec = base;
    spec.magnitude = m;
    const Contaminated cont = apply_contamination(clean, spec);
    bounds.push_back(huber_influence_bound(clean, cont.data, theta, c.huber, BoundRegime::general_whitening,
                                           h.delta, 16, c.seed));
  }

  const CovarianceBlocks blocks = assemble_joint(clean, theta);
  const ContaminationSpec first = [&] {
    ContaminationSpec s = base;
    s.magnitude = f.m;
    return s;
  }();
  const Contaminated c0 = apply_contamination(clean, first);
  const double u_var = f.eta * (f.m * c0.scale) * (f.m * c0.scale);
  const Eigen::MatrixXd sigma_u = u_var * Eigen::MatrixXd::Identity(blocks.n_lf(), blocks.n_lf());
  const PseudoTrueRho pt = pseudo_true_rho(blocks.sigma_LL(), sigma_u, blocks.B, blocks.Omega, theta.rho);

  const std::string gp = out_path(ctx, "influence_gaussian.csv");
  const std::string hp = out_path(ctx, "influence_huber.csv");
  const std::string bp = out_path(ctx, "bound.csv");
  const std::string kp = out_path(ctx, "attenuation.json");
  write_influence_csv(g, gp);
  write_influence_csv(h, hp);
  write_bound_csv(bounds, mags, bp);
  write_json(json{{"rho", theta.rho}, {"kappa", pt.kappa}, {"rho_star", pt.rho_star},
                  {"outlier_variance", u_var}, {"m", f.m}, {"eta", f.eta}},
             kp);
  finish(ctx, {{"influence_gaussian", gp}, {"influence_huber", hp}, {"bound", bp}, {"attenuation", kp}},
         {{"kappa", fmt(pt.kappa)}, {"rho_star", fmt(pt.rho_star)}});
}

void run_stats(const Context& ctx, const StatsFlags& f) {
  const Ingested in = read_station_csv(f.input, ingest_options(ctx.config));
  std::map<std::string, std::vector<double>> groups;
  for (const StationRecord& r : in.records) {
    std::string key;
    if (f.by == "type") key = r.fidelity == Fidelity::high ? "HF" : "LF";
    else if (f.by == "station") key = r.station_id;
    else throw InvalidArgument("unknown grouping '" + f.by + "' (type|station)");
    groups[key].push_back(r.value);
  }
  const std::vector<DescriptiveRow> rows = descriptive_stats(groups);
  const std::string path = out_path(ctx, "descriptive.csv");
  const std::string quality = out_path(ctx, "data_quality.json");
  write_descriptive_csv(rows, path);
  write_json(report_json(in.report), quality);
  finish(ctx, {{"descriptive", path}, {"data_quality", quality}},
         {{"groups", std::to_string(rows.size())}, {"sentinel", std::to_string(in.report.n_sentinel)}});
}

}  // namespace rmfgp::cli
