#include "rmfgp/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "rmfgp/error.hpp"

namespace rmfgp {

namespace {

void check_block(const std::vector<SpaceTimePoint>& pts, const Eigen::VectorXd& values,
                 const std::vector<int>& station, const char* name) {
  if (static_cast<std::size_t>(values.size()) != pts.size() || station.size() != pts.size()) {
    throw InvalidArgument(std::string(name) + " block: points, values and station ids differ in length");
  }
  for (const auto& p : pts) {
    if (!std::isfinite(p.s1) || !std::isfinite(p.s2) || !std::isfinite(p.t)) {
      throw InvalidArgument(std::string(name) + " block: non-finite coordinate");
    }
  }
  if (!values.allFinite()) {
    throw InvalidArgument(std::string(name) + " block: non-finite observation");
  }
}

void append_row(std::vector<SpaceTimePoint>& pts, std::vector<double>& vals, std::vector<int>& st,
                const SpaceTimePoint& p, double v, int s) {
  pts.push_back(p);
  vals.push_back(v);
  st.push_back(s);
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void FidelityDataset::validate() const {
  check_block(lf_points, lf_values, lf_station, "LF");
  check_block(hf_points, hf_values, hf_station, "HF");
}

void FidelityDataset::validate_nonempty() const {
  validate();
  if (lf_points.empty() || hf_points.empty()) {
    throw InvalidArgument("dataset must contain both LF and HF observations");
  }
}

FidelityDataset select_rows(const FidelityDataset& data, const std::vector<bool>& keep_lf,
                            const std::vector<bool>& keep_hf) {
  if (keep_lf.size() != data.n_lf() || keep_hf.size() != data.n_hf()) {
    throw InvalidArgument("select_rows: mask length mismatch");
  }
  FidelityDataset out;
  out.station_names = data.station_names;
  std::vector<double> lv, hv;
  for (std::size_t i = 0; i < data.n_lf(); ++i) {
    if (keep_lf[i]) {
      append_row(out.lf_points, lv, out.lf_station, data.lf_points[i],
                 data.lf_values[static_cast<Eigen::Index>(i)], data.lf_station[i]);
    }
  }
  for (std::size_t i = 0; i < data.n_hf(); ++i) {
    if (keep_hf[i]) {
      append_row(out.hf_points, hv, out.hf_station, data.hf_points[i],
                 data.hf_values[static_cast<Eigen::Index>(i)], data.hf_station[i]);
    }
  }
  out.lf_values = to_vector(lv);
  out.hf_values = to_vector(hv);
  return out;
}

FidelityDataset drop_hf_stations(const FidelityDataset& data, const std::vector<int>& stations) {
  std::vector<bool> keep_lf(data.n_lf(), true);
  std::vector<bool> keep_hf(data.n_hf());
  for (std::size_t i = 0; i < data.n_hf(); ++i) {
    keep_hf[i] = std::find(stations.begin(), stations.end(), data.hf_station[i]) == stations.end();
  }
  return select_rows(data, keep_lf, keep_hf);
}

FidelityDataset hf_rows_of(const FidelityDataset& data, const std::vector<int>& stations) {
  std::vector<bool> keep_lf(data.n_lf(), false);
  std::vector<bool> keep_hf(data.n_hf());
  for (std::size_t i = 0; i < data.n_hf(); ++i) {
    keep_hf[i] = std::find(stations.begin(), stations.end(), data.hf_station[i]) != stations.end();
  }
  return select_rows(data, keep_lf, keep_hf);
}

std::vector<int> station_ids(const FidelityDataset& data, Fidelity fidelity) {
  std::vector<int> ids = fidelity == Fidelity::low ? data.lf_station : data.hf_station;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace rmfgp
