#include "rmfgp/config.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <type_traits>

#include <json.hpp>

#include "rmfgp/error.hpp"

namespace rmfgp {

namespace {

using nlohmann::json;

// Reads fields of one JSON object and remembers which keys were consumed so
// that unknown keys can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidArgument("config: '" + where() + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& dst) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw InvalidArgument("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw InvalidArgument("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw InvalidArgument("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw InvalidArgument("");
      }
      dst = it->get<T>();
    } catch (const std::exception&) {
      throw InvalidArgument("config: '" + where() + key + "' has the wrong type");
    }
  }

  template <typename F>
  void read_with(const char* key, F&& apply) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      apply(*it);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("config: '" + where() + key + "': " + e.what());
    } catch (const json::exception&) {
      throw InvalidArgument("config: '" + where() + key + "' has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string child_path(const char* key) const { return where() + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw InvalidArgument("config: unknown key '" + where() + key + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? std::string() : path_ + "."; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string text_of(const json& v) {
  if (!v.is_string()) throw InvalidArgument("expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers_of(const json& v) {
  if (!v.is_array()) throw InvalidArgument("expected an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw InvalidArgument("expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

std::string_view to_string(OutlierMechanism mechanism) {
  switch (mechanism) {
    case OutlierMechanism::additive_sd: return "additive";
    case OutlierMechanism::multiplicative: return "multiplicative";
    case OutlierMechanism::student_t: return "student_t";
  }
  return "additive";
}

OutlierMechanism parse_mechanism(std::string_view text) {
  if (text == "additive") return OutlierMechanism::additive_sd;
  if (text == "multiplicative") return OutlierMechanism::multiplicative;
  if (text == "student_t") return OutlierMechanism::student_t;
  throw InvalidArgument("unknown outlier mechanism '" + std::string(text) +
                        "' (additive|multiplicative|student_t)");
}

std::string_view to_string(DeltaPolicy policy) {
  return policy == DeltaPolicy::fixed_from_init ? "fixed_from_init" : "recompute_per_iteration";
}

DeltaPolicy parse_delta_policy(std::string_view text) {
  if (text == "fixed_from_init") return DeltaPolicy::fixed_from_init;
  if (text == "recompute_per_iteration") return DeltaPolicy::recompute_per_iteration;
  throw InvalidArgument("unknown delta policy '" + std::string(text) +
                        "' (fixed_from_init|recompute_per_iteration)");
}

std::string_view to_string(PredictorKind kind) {
  return kind == PredictorKind::plug_in ? "plug_in" : "huber_weighted";
}

PredictorKind parse_predictor(std::string_view text) {
  if (text == "plug_in") return PredictorKind::plug_in;
  if (text == "huber_weighted") return PredictorKind::huber_weighted;
  throw InvalidArgument("unknown predictor '" + std::string(text) + "' (plug_in|huber_weighted)");
}

std::pair<int, int> parse_grid_size(std::string_view text) {
  const auto x = text.find('x');
  if (x == std::string_view::npos) throw InvalidArgument("grid size '" + std::string(text) + "' is not NxM");
  int a = 0, b = 0;
  const auto ra = std::from_chars(text.data(), text.data() + x, a);
  const auto rb = std::from_chars(text.data() + x + 1, text.data() + text.size(), b);
  if (ra.ec != std::errc() || ra.ptr != text.data() + x || rb.ec != std::errc() ||
      rb.ptr != text.data() + text.size() || a < 1 || b < 1) {
    throw InvalidArgument("grid size '" + std::string(text) + "' is not NxM with positive N, M");
  }
  return {a, b};
}

void RunConfig::validate() const {
  if (threads < 0) throw InvalidArgument("config: threads must be >= 0");
  dgp.validate();
  huber.validate();
  optimizer.validate();
  if (!(cv.window_len > 0.0)) throw InvalidArgument("config: cv.window_len must be positive");
  if (cv.k_nearest < 1) throw InvalidArgument("config: cv.k_nearest must be >= 1");
  if (mc.runs < 1) throw InvalidArgument("config: mc.runs must be >= 1");
  if (mc.m.empty() || mc.eta.empty()) throw InvalidArgument("config: mc grid must be nonempty");
  for (const double m : mc.m) {
    if (!(m >= 0.0)) throw InvalidArgument("config: mc.m entries must be >= 0");
  }
  for (const double e : mc.eta) {
    if (!(e >= 0.0 && e <= 1.0)) throw InvalidArgument("config: mc.eta entries must lie in [0, 1]");
  }
  grid.bbox.validate();
  if (grid.n_lon < 1 || grid.n_lat < 1) throw InvalidArgument("config: grid size must be positive");
  if (prefilter_max && !std::isfinite(*prefilter_max)) throw InvalidArgument("config: prefilter_max must be finite");
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config: malformed JSON: ") + e.what());
  }
  RunConfig c;
  Section top(root, "");
  top.read("seed", c.seed);
  top.read("out_dir", c.out_dir);
  top.read("threads", c.threads);
  top.read_with("loss", [&](const json& v) { c.loss = parse_loss(text_of(v)); });
  top.read("center", c.center);
  top.read("aggregate_daily", c.aggregate_daily);
  top.read_with("prefilter_max", [&](const json& v) {
    if (!v.is_number()) throw InvalidArgument("expected a number");
    c.prefilter_max = v.get<double>();
  });

  if (const json* j = top.child("dgp")) {
    Section s(*j, "dgp");
    s.read("grid_side", c.dgp.grid_side);
    s.read("n_times", c.dgp.n_times);
    s.read("sigma_L_sq", c.dgp.sigma_L_sq);
    s.read("sigma_delta_sq", c.dgp.sigma_delta_sq);
    s.read("noise_L", c.dgp.noise_L);
    s.read("noise_delta", c.dgp.noise_delta);
    s.read("rho", c.dgp.rho);
    s.read("c_t", c.dgp.c_t);
    s.read("c_s_L", c.dgp.c_s_L);
    s.read("c_s_delta", c.dgp.c_s_delta);
    s.read("jitter", c.dgp.jitter);
    s.read("train_fraction", c.dgp.train_fraction);
    s.finish();
  }
  if (const json* j = top.child("huber")) {
    Section s(*j, "huber");
    s.read("c_multiplier", c.huber.c_multiplier);
    s.read("mad_consistency", c.huber.mad_consistency);
    s.read_with("whitening", [&](const json& v) { c.huber.whitening = WhiteningMode::parse(text_of(v)); });
    s.read_with("delta_policy", [&](const json& v) { c.huber.delta_policy = parse_delta_policy(text_of(v)); });
    s.read("delta_floor", c.huber.delta_floor);
    s.finish();
  }
  if (const json* j = top.child("optimizer")) {
    Section s(*j, "optimizer");
    s.read("max_iter", c.optimizer.max_iter);
    s.read("grad_tol", c.optimizer.grad_tol);
    s.read("rel_tol", c.optimizer.rel_tol);
    s.read("gradient_step", c.optimizer.gradient_step);
    s.read("max_step", c.optimizer.max_step);
    s.finish();
  }
  if (const json* j = top.child("cv")) {
    Section s(*j, "cv");
    s.read("window_len", c.cv.window_len);
    s.read("k_nearest", c.cv.k_nearest);
    s.finish();
  }
  if (const json* j = top.child("mc")) {
    Section s(*j, "mc");
    s.read("runs", c.mc.runs);
    s.read_with("m", [&](const json& v) { c.mc.m = numbers_of(v); });
    s.read_with("eta", [&](const json& v) { c.mc.eta = numbers_of(v); });
    s.read_with("mechanism", [&](const json& v) { c.mc.mechanism = parse_mechanism(text_of(v)); });
    s.read_with("robust_predictor", [&](const json& v) { c.mc.robust_predictor = parse_predictor(text_of(v)); });
    s.finish();
  }
  if (const json* j = top.child("grid")) {
    Section s(*j, "grid");
    s.read_with("bbox", [&](const json& v) { c.grid.bbox = BoundingBox::parse(text_of(v)); });
    s.read_with("size", [&](const json& v) {
      const auto [a, b] = parse_grid_size(text_of(v));
      c.grid.n_lon = a;
      c.grid.n_lat = b;
    });
    s.finish();
  }
  if (const json* j = top.child("columns")) {
    Section s(*j, "columns");
    s.read("station_id", c.columns.station_id);
    s.read("lon", c.columns.lon);
    s.read("lat", c.columns.lat);
    s.read("timestamp", c.columns.timestamp);
    s.read("value", c.columns.value);
    s.read("fidelity", c.columns.fidelity);
    s.read("hf_tag", c.columns.hf_tag);
    s.read("lf_tag", c.columns.lf_tag);
    s.read_with("delimiter", [&](const json& v) {
      const std::string d = text_of(v);
      if (d.size() != 1) throw InvalidArgument("delimiter must be a single character");
      c.columns.delimiter = d[0];
    });
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_text_file(path)); }

std::string to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["threads"] = c.threads;
  j["loss"] = std::string(to_string(c.loss));
  j["center"] = c.center;
  j["aggregate_daily"] = c.aggregate_daily;
  j["prefilter_max"] = c.prefilter_max ? json(*c.prefilter_max) : json(nullptr);
  j["dgp"] = {{"grid_side", c.dgp.grid_side},       {"n_times", c.dgp.n_times},
              {"sigma_L_sq", c.dgp.sigma_L_sq},     {"sigma_delta_sq", c.dgp.sigma_delta_sq},
              {"noise_L", c.dgp.noise_L},           {"noise_delta", c.dgp.noise_delta},
              {"rho", c.dgp.rho},                   {"c_t", c.dgp.c_t},
              {"c_s_L", c.dgp.c_s_L},               {"c_s_delta", c.dgp.c_s_delta},
              {"jitter", c.dgp.jitter},             {"train_fraction", c.dgp.train_fraction}};
  j["huber"] = {{"c_multiplier", c.huber.c_multiplier},
                {"mad_consistency", c.huber.mad_consistency},
                {"whitening", c.huber.whitening.to_string()},
                {"delta_policy", std::string(to_string(c.huber.delta_policy))},
                {"delta_floor", c.huber.delta_floor}};
  j["optimizer"] = {{"max_iter", c.optimizer.max_iter},
                    {"grad_tol", c.optimizer.grad_tol},
                    {"rel_tol", c.optimizer.rel_tol},
                    {"gradient_step", c.optimizer.gradient_step},
                    {"max_step", c.optimizer.max_step}};
  j["cv"] = {{"window_len", c.cv.window_len}, {"k_nearest", c.cv.k_nearest}};
  j["mc"] = {{"runs", c.mc.runs},
             {"m", c.mc.m},
             {"eta", c.mc.eta},
             {"mechanism", std::string(to_string(c.mc.mechanism))},
             {"robust_predictor", std::string(to_string(c.mc.robust_predictor))}};
  const BoundingBox& b = c.grid.bbox;
  j["grid"] = {{"bbox", json(b.lon_min).dump() + "," + json(b.lon_max).dump() + "," + json(b.lat_min).dump() +
                            "," + json(b.lat_max).dump()},
               {"size", std::to_string(c.grid.n_lon) + "x" + std::to_string(c.grid.n_lat)}};
  j["columns"] = {{"station_id", c.columns.station_id}, {"lon", c.columns.lon},
                  {"lat", c.columns.lat},               {"timestamp", c.columns.timestamp},
                  {"value", c.columns.value},           {"fidelity", c.columns.fidelity},
                  {"hf_tag", c.columns.hf_tag},         {"lf_tag", c.columns.lf_tag},
                  {"delimiter", std::string(1, c.columns.delimiter)}};
  return j.dump(2);
}

}  // namespace rmfgp
