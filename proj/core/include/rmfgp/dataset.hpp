#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmfgp/kernels.hpp"

namespace rmfgp {

enum class Fidelity { low, high };

/// Paired low- and high-fidelity observations. Rows of each fidelity are
/// station-major with time varying fastest; station ids index station_names.
struct FidelityDataset {
  std::vector<SpaceTimePoint> lf_points;
  Eigen::VectorXd lf_values;
  std::vector<int> lf_station;

  std::vector<SpaceTimePoint> hf_points;
  Eigen::VectorXd hf_values;
  std::vector<int> hf_station;

  std::vector<std::string> station_names;

  std::size_t n_lf() const { return lf_points.size(); }
  std::size_t n_hf() const { return hf_points.size(); }

  /// Throws InvalidArgument on length mismatches or non-finite entries.
  void validate() const;
  /// validate() plus both fidelities nonempty.
  void validate_nonempty() const;
};

/// Keeps the rows whose flags are true; flags must match the row counts.
FidelityDataset select_rows(const FidelityDataset& data, const std::vector<bool>& keep_lf,
                            const std::vector<bool>& keep_hf);

/// Drops every HF row belonging to a station in `stations`; LF rows are kept.
FidelityDataset drop_hf_stations(const FidelityDataset& data, const std::vector<int>& stations);

/// Only the HF rows of `stations` (LF block emptied).
FidelityDataset hf_rows_of(const FidelityDataset& data, const std::vector<int>& stations);

/// Sorted unique station ids of one fidelity.
std::vector<int> station_ids(const FidelityDataset& data, Fidelity fidelity);

}  // namespace rmfgp
