#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli.hpp"
#include "rmfgp/error.hpp"

namespace {

using namespace rmfgp;

void add_common(CLI::App& app, cli::CommonFlags& f) {
  app.add_option("--config", f.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "Random seed");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--loss", f.loss, "gaussian or huber");
  app.add_option("--whitening", f.whitening, "diag, full or reg:<lambda>");
  app.add_option("--c-mult", f.c_mult, "Huber threshold multiplier of the MAD scale");
  app.add_option("--bbox", f.bbox, "lon_min,lon_max,lat_min,lat_max");
  app.add_option("--grid", f.grid, "Grid size NxM; for mc also m=2,5,10 eta=0.1,0.3,0.5")->expected(1, -1);
  app.add_option("--window-len", f.window_len, "Cross-validation window length in days");
  app.add_option("--k-nearest", f.k_nearest, "LF sites kept per HF site");
  app.add_option("--prefilter", f.prefilter, "Drop values above this threshold");
  app.add_option("--columns", f.columns, "Column mapping field=column,...");
  app.add_option("--threads", f.threads, "Worker threads (0: all cores)");
  app.add_flag("--center", f.center, "Estimate constant means by centering");
  app.add_flag("--aggregate-daily", f.aggregate_daily, "Average each station-day");
}

int fail(const std::string& kind, const std::string& message, int code) {
  nlohmann::json j{{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << j.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust multi-fidelity Gaussian process co-kriging"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rmfgp::version()));

  cli::CommonFlags common;
  cli::SimulateFlags sim;
  cli::ContaminateFlags cont;
  cli::FitFlags fitf;
  cli::PredictFlags pred;
  cli::CvFlags cv;
  cli::McFlags mc;
  cli::TheoryFlags th;
  cli::StatsFlags st;

  auto* s = app.add_subcommand("simulate", "Draw a synthetic two-fidelity dataset");
  add_common(*s, common);
  s->add_option("--panel-days", sim.panel_days, "Daily panel length (0: lattice generator)");
  s->add_option("--panel-hf", sim.panel_hf, "HF stations in the panel");
  s->add_option("--panel-lf", sim.panel_lf, "LF stations in the panel");

  auto* c = app.add_subcommand("contaminate", "Inject LF outliers or level shifts");
  add_common(*c, common);
  c->add_option("--input", cont.input)->required()->check(CLI::ExistingFile);
  c->add_option("--kind", cont.kind, "outlier or shift");
  c->add_option("--m", cont.m, "Outlier magnitude in sd(f_L) units, or shift size");
  c->add_option("--eta", cont.eta, "Outlier frequency");
  c->add_option("--changepoint", cont.changepoint, "Shift onset time");
  c->add_option("--stations", cont.stations, "Shifted LF station ids")->delimiter(',');
  c->add_option("--mechanism", cont.mechanism, "additive, multiplicative or student_t");

  auto* f = app.add_subcommand("fit", "Estimate model parameters");
  add_common(*f, common);
  f->add_option("--input", fitf.input)->required()->check(CLI::ExistingFile);
  f->add_option("--init", fitf.init, "Parameter JSON or 'truth'; data-driven when omitted");

  auto* p = app.add_subcommand("predict", "Predict the HF field at points or on a grid");
  add_common(*p, common);
  p->add_option("--input", pred.input)->required()->check(CLI::ExistingFile);
  p->add_option("--params", pred.params)->required()->check(CLI::ExistingFile);
  p->add_option("--points", pred.points, "CSV of s1,s2,t query points")->check(CLI::ExistingFile);
  p->add_option("--times", pred.times, "Grid times (default: all observed)")->delimiter(',');
  p->add_option("--predictor", pred.predictor, "plug_in or huber_weighted");

  auto* v = app.add_subcommand("cv", "Spatio-temporal block cross-validation");
  add_common(*v, common);
  v->add_option("--input", cv.input)->required()->check(CLI::ExistingFile);
  v->add_option("--predictor", cv.predictor, "Predictor for the robust model");

  auto* m = app.add_subcommand("mc", "Monte Carlo contamination study");
  add_common(*m, common);
  m->add_option("--runs", mc.runs, "Replications per cell");
  m->add_option("--mechanism", mc.mechanism, "additive, multiplicative or student_t");
  m->add_option("--predictor", mc.predictor, "Predictor for the robust model");

  auto* t = app.add_subcommand("theory", "Attenuation factor, influence curves and the influence bound");
  add_common(*t, common);
  t->add_option("--m", th.m, "Base outlier magnitude");
  t->add_option("--eta", th.eta, "Outlier frequency");
  t->add_option("--scales", th.scales, "Magnitude multipliers")->delimiter(',');

  auto* d = app.add_subcommand("stats", "Descriptive statistics and data quality");
  add_common(*d, common);
  d->add_option("--input", st.input)->required()->check(CLI::ExistingFile);
  d->add_option("--by", st.by, "type or station");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::vector<std::string> args(argv, argv + argc);
  try {
    CLI::App* sub = app.get_subcommands().front();
    mc.grid = common.grid;
    const cli::Context ctx = cli::resolve(common, sub->get_name(), args);
    if (sub == s) cli::run_simulate(ctx, sim);
    else if (sub == c) cli::run_contaminate(ctx, cont);
    else if (sub == f) cli::run_fit(ctx, fitf);
    else if (sub == p) cli::run_predict(ctx, pred);
    else if (sub == v) cli::run_cv(ctx, cv);
    else if (sub == m) cli::run_mc(ctx, mc);
    else if (sub == t) cli::run_theory(ctx, th);
    else cli::run_stats(ctx, st);
  } catch (const InvalidArgument& e) {
    return fail("invalid_argument", e.what(), 2);
  } catch (const IoError& e) {
    return fail("io", e.what(), 3);
  } catch (const NumericalError& e) {
    return fail("numerical", e.what(), 4);
  } catch (const FitError& e) {
    return fail("fit", e.what(), 5);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
