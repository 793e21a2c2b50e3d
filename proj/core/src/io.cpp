#include "rmfgp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "rmfgp/error.hpp"

#ifndef RMFGP_VERSION
#define RMFGP_VERSION "0.0.0"
#endif

namespace rmfgp {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

// Splits one CSV line; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_csv(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("number formatting failed");
  return std::string(buf, ptr);
}

// Days since 1970-01-01 of a proleptic Gregorian date.
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

std::string civil_from_days(long long z) {
  z += 719468;
  const long long era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  long long y = static_cast<long long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u", y, m, d);
  return buf;
}

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

// Fractional days since the epoch for YYYY-MM-DD[(T| )HH:MM[:SS[.f]]][Z|+HH:MM|-HH:MM].
std::optional<double> parse_iso(std::string_view s) {
  s = trim(s);
  int y = 0, mo = 0, d = 0;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-' || !read_int(s, 0, 4, y) || !read_int(s, 5, 2, mo) ||
      !read_int(s, 8, 2, d)) {
    return std::nullopt;
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
  double seconds = 0.0;
  std::size_t pos = 10;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    int hh = 0, mm = 0, ss = 0;
    if (!read_int(s, pos + 1, 2, hh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !read_int(s, pos + 4, 2, mm)) {
      return std::nullopt;
    }
    pos += 6;
    double frac = 0.0;
    if (pos < s.size() && s[pos] == ':') {
      if (!read_int(s, pos + 1, 2, ss)) return std::nullopt;
      pos += 3;
      if (pos < s.size() && s[pos] == '.') {
        std::size_t end = pos + 1;
        while (end < s.size() && s[end] >= '0' && s[end] <= '9') ++end;
        const auto f = parse_double(std::string("0") + std::string(s.substr(pos, end - pos)));
        if (!f) return std::nullopt;
        frac = *f;
        pos = end;
      }
    }
    if (hh > 24 || mm > 59 || ss > 60) return std::nullopt;
    seconds = hh * 3600.0 + mm * 60.0 + ss + frac;
    if (pos < s.size() && s[pos] == 'Z') {
      ++pos;
    } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
      int oh = 0, om = 0;
      const double sign = s[pos] == '+' ? 1.0 : -1.0;
      if (!read_int(s, pos + 1, 2, oh)) return std::nullopt;
      std::size_t q = pos + 3;
      if (q < s.size() && s[q] == ':') ++q;
      if (!read_int(s, q, 2, om)) return std::nullopt;
      seconds -= sign * (oh * 3600.0 + om * 60.0);
      pos = q + 2;
    }
  }
  if (pos != s.size()) return std::nullopt;
  return static_cast<double>(days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d))) +
         seconds / 86400.0;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

void check_written(const std::ofstream& f, const std::string& path) {
  if (!f) throw IoError("write failed for '" + path + "'");
}

json kernel_json(const KernelParams& k) {
  return json{{"signal_variance", k.signal_variance},
              {"lengthscale_s1", k.lengthscale_s1},
              {"lengthscale_s2", k.lengthscale_s2},
              {"lengthscale_t", k.lengthscale_t}};
}

KernelParams kernel_from(const json& j) {
  return {j.at("signal_variance").get<double>(), j.at("lengthscale_s1").get<double>(),
          j.at("lengthscale_s2").get<double>(), j.at("lengthscale_t").get<double>()};
}

std::string station_label(const FidelityDataset& data, int id) {
  if (id >= 0 && static_cast<std::size_t>(id) < data.station_names.size()) {
    return data.station_names[static_cast<std::size_t>(id)];
  }
  return "S" + std::to_string(id);
}

}  // namespace

std::string_view version() { return RMFGP_VERSION; }

ColumnMapping ColumnMapping::parse(std::string_view overrides) {
  ColumnMapping m;
  overrides = trim(overrides);
  if (overrides.empty()) return m;
  for (const std::string& item : split_csv(overrides, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgument("column mapping entry '" + item + "' lacks '='");
    const std::string key(trim(std::string_view(item).substr(0, eq)));
    const std::string val(trim(std::string_view(item).substr(eq + 1)));
    if (val.empty()) throw InvalidArgument("column mapping entry '" + item + "' has an empty column");
    if (key == "station_id") m.station_id = val;
    else if (key == "lon") m.lon = val;
    else if (key == "lat") m.lat = val;
    else if (key == "timestamp" || key == "t") m.timestamp = val;
    else if (key == "value") m.value = val;
    else if (key == "fidelity") m.fidelity = val;
    else if (key == "hf_tag") m.hf_tag = val;
    else if (key == "lf_tag") m.lf_tag = val;
    else throw InvalidArgument("unknown column mapping field '" + key + "'");
  }
  return m;
}

Ingested read_station_csv(std::istream& in, const IngestOptions& options) {
  const ColumnMapping& map = options.mapping;
  if (options.bbox) options.bbox->validate();

  std::string line;
  if (!std::getline(in, line)) throw IoError("station CSV is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  const std::vector<std::string> header = split_csv(line, map.delimiter);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError("missing required column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_id = column(map.station_id), c_lon = column(map.lon), c_lat = column(map.lat),
                    c_t = column(map.timestamp), c_val = column(map.value), c_fid = column(map.fidelity);
  const std::size_t needed = std::max({c_id, c_lon, c_lat, c_t, c_val, c_fid}) + 1;

  Ingested out;
  IngestReport& rep = out.report;
  auto skip = [&](std::size_t line_no, const std::string& why) {
    ++rep.n_skipped;
    if (rep.skip_reasons.size() < 20) rep.skip_reasons.push_back("line " + std::to_string(line_no) + ": " + why);
  };

  std::vector<std::pair<StationRecord, bool>> parsed;  // record, timestamp was calendar based
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++rep.n_rows;
    const std::vector<std::string> f = split_csv(line, map.delimiter);
    if (f.size() < needed) {
      skip(line_no, "too few fields");
      continue;
    }
    StationRecord r;
    r.station_id = f[c_id];
    r.timestamp = f[c_t];
    if (r.station_id.empty()) {
      skip(line_no, "empty station id");
      continue;
    }
    const auto lon = parse_double(f[c_lon]);
    const auto lat = parse_double(f[c_lat]);
    const auto val = parse_double(f[c_val]);
    if (!lon || !lat || !std::isfinite(*lon) || !std::isfinite(*lat)) {
      skip(line_no, "invalid coordinates");
      continue;
    }
    if (!val || !std::isfinite(*val)) {
      skip(line_no, "invalid value '" + f[c_val] + "'");
      continue;
    }
    if (f[c_fid] == map.hf_tag) {
      r.fidelity = Fidelity::high;
    } else if (f[c_fid] == map.lf_tag) {
      r.fidelity = Fidelity::low;
    } else {
      skip(line_no, "unknown fidelity '" + f[c_fid] + "'");
      continue;
    }
    bool calendar = false;
    if (const auto num = parse_double(r.timestamp); num && std::isfinite(*num)) {
      r.time = *num;
    } else if (const auto iso = parse_iso(r.timestamp)) {
      r.time = *iso;
      calendar = true;
    } else {
      skip(line_no, "unparsable timestamp '" + r.timestamp + "'");
      continue;
    }
    r.lon = *lon;
    r.lat = *lat;
    r.value = *val;
    if (options.bbox && !options.bbox->contains(r.lon, r.lat)) {
      ++rep.n_outside_bbox;
      continue;
    }
    if (options.prefilter_max && r.value > *options.prefilter_max) {
      ++rep.n_prefiltered;
      continue;
    }
    if (std::abs(r.value - options.sentinel) < 1e-9) ++rep.n_sentinel;
    parsed.emplace_back(std::move(r), calendar);
  }

  const bool any_calendar = std::any_of(parsed.begin(), parsed.end(), [](const auto& p) { return p.second; });
  const bool all_calendar = std::all_of(parsed.begin(), parsed.end(), [](const auto& p) { return p.second; });
  if (any_calendar && !all_calendar) throw IoError("station CSV mixes numeric and calendar timestamps");
  if (any_calendar) {
    double first = std::numeric_limits<double>::infinity();
    for (const auto& p : parsed) first = std::min(first, std::floor(p.first.time));
    for (auto& p : parsed) p.first.time -= first;
    rep.origin = civil_from_days(static_cast<long long>(first));
  }

  for (auto& p : parsed) out.records.push_back(std::move(p.first));

  if (options.aggregate_daily) {
    std::map<std::tuple<std::string, int, long long>, std::pair<StationRecord, int>> groups;
    for (const StationRecord& r : out.records) {
      const auto key = std::make_tuple(r.station_id, r.fidelity == Fidelity::high ? 1 : 0,
                                       static_cast<long long>(std::floor(r.time)));
      auto it = groups.find(key);
      if (it == groups.end()) {
        StationRecord a = r;
        a.time = std::floor(r.time);
        a.timestamp = any_calendar ? civil_from_days(static_cast<long long>(a.time)) : format_double(a.time);
        groups.emplace(key, std::make_pair(a, 1));
      } else {
        it->second.first.value += r.value;
        ++it->second.second;
      }
    }
    out.records.clear();
    for (auto& [key, g] : groups) {
      g.first.value /= g.second;
      out.records.push_back(std::move(g.first));
    }
  }

  rep.n_valid = out.records.size();
  if (out.records.empty()) throw InvalidArgument("station CSV has no valid rows");
  out.dataset = records_to_dataset(out.records);
  return out;
}

Ingested read_station_csv(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_station_csv(in, options);
}

FidelityDataset records_to_dataset(const std::vector<StationRecord>& records) {
  std::set<std::string> names;
  for (const auto& r : records) names.insert(r.station_id);
  FidelityDataset d;
  d.station_names.assign(names.begin(), names.end());
  auto id_of = [&](const std::string& s) {
    return static_cast<int>(std::lower_bound(d.station_names.begin(), d.station_names.end(), s) -
                            d.station_names.begin());
  };

  std::vector<const StationRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [&](const StationRecord* a, const StationRecord* b) {
    const int ia = id_of(a->station_id), ib = id_of(b->station_id);
    if (ia != ib) return ia < ib;
    return a->time < b->time;
  });

  std::vector<double> lf, hf;
  for (const StationRecord* r : sorted) {
    const SpaceTimePoint p{r->lon, r->lat, r->time};
    if (r->fidelity == Fidelity::low) {
      d.lf_points.push_back(p);
      d.lf_station.push_back(id_of(r->station_id));
      lf.push_back(r->value);
    } else {
      d.hf_points.push_back(p);
      d.hf_station.push_back(id_of(r->station_id));
      hf.push_back(r->value);
    }
  }
  d.lf_values = Eigen::Map<const Eigen::VectorXd>(lf.data(), static_cast<Eigen::Index>(lf.size()));
  d.hf_values = Eigen::Map<const Eigen::VectorXd>(hf.data(), static_cast<Eigen::Index>(hf.size()));
  d.validate();
  return d;
}

void write_dataset_csv(const FidelityDataset& data, std::ostream& out) {
  data.validate();
  out << "station_id,lon,lat,t,value,fidelity\n";
  auto rows = [&](const std::vector<SpaceTimePoint>& pts, const Eigen::VectorXd& vals,
                  const std::vector<int>& st, const char* tag) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out << station_label(data, st[i]) << ',' << format_double(pts[i].s1) << ',' << format_double(pts[i].s2)
          << ',' << format_double(pts[i].t) << ',' << format_double(vals[static_cast<Eigen::Index>(i)]) << ','
          << tag << '\n';
    }
  };
  rows(data.lf_points, data.lf_values, data.lf_station, "LF");
  rows(data.hf_points, data.hf_values, data.hf_station, "HF");
}

void write_dataset_csv(const FidelityDataset& data, const std::string& path) {
  std::ofstream f = open_out(path);
  write_dataset_csv(data, f);
  check_written(f, path);
}

std::vector<Site> nearest_lf_selection(const std::vector<Site>& hf_sites, const std::vector<Site>& lf_sites,
                                       int k) {
  if (k < 1) throw InvalidArgument("nearest_lf_selection: k must be at least 1");
  if (lf_sites.empty()) throw InvalidArgument("nearest_lf_selection: no LF sites");
  if (hf_sites.empty()) throw InvalidArgument("nearest_lf_selection: no HF sites");
  std::map<std::string, Site> chosen;
  std::vector<std::pair<double, const Site*>> ranked(lf_sites.size());
  for (const Site& h : hf_sites) {
    for (std::size_t i = 0; i < lf_sites.size(); ++i) {
      const double dx = lf_sites[i].lon - h.lon, dy = lf_sites[i].lat - h.lat;
      ranked[i] = {dx * dx + dy * dy, &lf_sites[i]};
    }
    const auto take = std::min(ranked.size(), static_cast<std::size_t>(k));
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first < b.first;
                        return a.second->id < b.second->id;
                      });
    for (std::size_t i = 0; i < take; ++i) chosen.emplace(ranked[i].second->id, *ranked[i].second);
  }
  std::vector<Site> out;
  out.reserve(chosen.size());
  for (auto& [id, s] : chosen) out.push_back(s);
  return out;
}

std::vector<Site> dataset_sites(const FidelityDataset& data, Fidelity fidelity) {
  const auto& pts = fidelity == Fidelity::low ? data.lf_points : data.hf_points;
  const auto& st = fidelity == Fidelity::low ? data.lf_station : data.hf_station;
  std::map<int, Site> sites;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    sites.emplace(st[i], Site{station_label(data, st[i]), pts[i].s1, pts[i].s2});
  }
  std::vector<Site> out;
  for (auto& [id, s] : sites) out.push_back(s);
  return out;
}

FidelityDataset keep_lf_sites(const FidelityDataset& data, const std::vector<Site>& sites) {
  std::set<std::string> keep;
  for (const Site& s : sites) keep.insert(s.id);
  std::vector<bool> lf(data.n_lf());
  for (std::size_t i = 0; i < lf.size(); ++i) lf[i] = keep.count(station_label(data, data.lf_station[i])) > 0;
  return select_rows(data, lf, std::vector<bool>(data.n_hf(), true));
}

void write_prediction_csv(const Prediction& pred, const std::string& path) {
  std::ofstream f = open_out(path);
  f << "s1,s2,t,mean,sd\n";
  for (std::size_t i = 0; i < pred.points.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    f << format_double(pred.points[i].s1) << ',' << format_double(pred.points[i].s2) << ','
      << format_double(pred.points[i].t) << ',' << format_double(pred.mean[k]) << ','
      << format_double(std::sqrt(std::max(pred.variance[k], 0.0))) << '\n';
  }
  check_written(f, path);
}

void write_grid_csv(const GridPrediction& grid, const std::string& path) {
  std::ofstream f = open_out(path);
  f << "lon,lat,t,mean,sd\n";
  const Prediction& p = grid.field;
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    f << format_double(p.points[i].s1) << ',' << format_double(p.points[i].s2) << ','
      << format_double(p.points[i].t) << ',' << format_double(p.mean[k]) << ','
      << format_double(std::sqrt(std::max(p.variance[k], 0.0))) << '\n';
  }
  check_written(f, path);
}

void write_grid_summary_csv(const GridPrediction& grid, const std::string& path) {
  std::ofstream f = open_out(path);
  f << "lon,lat,temporal_mean,temporal_sd,mean_sd\n";
  for (const GridCell& c : grid.cells) {
    f << format_double(c.lon) << ',' << format_double(c.lat) << ',' << format_double(c.temporal_mean) << ','
      << format_double(c.temporal_sd) << ',' << format_double(c.mean_sd) << '\n';
  }
  check_written(f, path);
}

std::string params_to_json(const ModelParams& theta) {
  const json j{{"rho", theta.rho},
               {"kernel_L", kernel_json(theta.kernel_L)},
               {"kernel_delta", kernel_json(theta.kernel_delta)},
               {"tau_L_sq", theta.tau_L_sq},
               {"tau_H_sq", theta.tau_H_sq},
               {"mu_L", theta.mu_L},
               {"mu_delta", theta.mu_delta}};
  return j.dump(2);
}

ModelParams params_from_json(const std::string& text) {
  ModelParams t;
  try {
    const json j = json::parse(text);
    const json& p = j.contains("theta") ? j.at("theta") : j;
    t.rho = p.at("rho").get<double>();
    t.kernel_L = kernel_from(p.at("kernel_L"));
    t.kernel_delta = kernel_from(p.at("kernel_delta"));
    t.tau_L_sq = p.at("tau_L_sq").get<double>();
    t.tau_H_sq = p.at("tau_H_sq").get<double>();
    t.mu_L = p.value("mu_L", 0.0);
    t.mu_delta = p.value("mu_delta", 0.0);
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed parameter JSON: ") + e.what());
  }
  t.validate();
  return t;
}

void write_params_json(const ModelParams& theta, const std::string& path) {
  std::ofstream f = open_out(path);
  f << params_to_json(theta) << '\n';
  check_written(f, path);
}

ModelParams read_params_json(const std::string& path) { return params_from_json(read_text_file(path)); }

std::vector<SpaceTimePoint> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("points CSV '" + path + "' is empty");
  const auto header = split_csv(line, ',');
  auto find = [&](std::initializer_list<const char*> names) -> std::size_t {
    for (const char* n : names) {
      const auto it = std::find(header.begin(), header.end(), n);
      if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
    }
    throw IoError("points CSV '" + path + "' lacks column " + *names.begin());
  };
  const std::size_t a = find({"s1", "lon"}), b = find({"s2", "lat"}), c = find({"t"});
  std::vector<SpaceTimePoint> pts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line, ',');
    const std::size_t need = std::max({a, b, c}) + 1;
    std::optional<double> x, y, t;
    if (f.size() >= need) {
      x = parse_double(f[a]);
      y = parse_double(f[b]);
      t = parse_double(f[c]);
    }
    if (!x || !y || !t || !std::isfinite(*x) || !std::isfinite(*y) || !std::isfinite(*t)) {
      throw IoError("points CSV '" + path + "' line " + std::to_string(line_no) + " is malformed");
    }
    pts.push_back({*x, *y, *t});
  }
  if (pts.empty()) throw IoError("points CSV '" + path + "' has no rows");
  return pts;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string manifest_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["config_hash"] = fnv1a_hex(m.config_text);
  j["config"] = m.config_text;
  j["seed"] = m.seed;
  j["versions"] = {{"rmfgp", std::string(version())},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                 "." + std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  j["outputs"] = m.outputs;
  j["extra"] = m.extra;
  return j.dump(2);
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  std::ofstream f = open_out(path);
  f << manifest_json(manifest) << '\n';
  check_written(f, path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rmfgp
