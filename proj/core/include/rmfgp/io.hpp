#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rmfgp/covariance.hpp"
#include "rmfgp/dataset.hpp"
#include "rmfgp/prediction.hpp"

namespace rmfgp {

std::string_view version();

struct StationRecord {
  std::string station_id;
  double lon = 0.0;
  double lat = 0.0;
  std::string timestamp;
  double time = 0.0;  // day index after normalization
  double value = 0.0;
  Fidelity fidelity = Fidelity::low;
};

/// Which input columns hold which field, and how fidelity is spelled.
/// Defaults match the files written by write_dataset_csv.
struct ColumnMapping {
  std::string station_id = "station_id";
  std::string lon = "lon";
  std::string lat = "lat";
  std::string timestamp = "t";
  std::string value = "value";
  std::string fidelity = "fidelity";
  std::string hf_tag = "HF";
  std::string lf_tag = "LF";
  char delimiter = ',';

  /// Overrides from "field=column,..." with fields station_id, lon, lat,
  /// timestamp, value, fidelity, hf_tag, lf_tag.
  static ColumnMapping parse(std::string_view overrides);
};

struct IngestOptions {
  ColumnMapping mapping;
  /// Replace each station-day by its mean value.
  bool aggregate_daily = false;
  /// Drop rows whose value exceeds this threshold (off by default).
  std::optional<double> prefilter_max;
  std::optional<BoundingBox> bbox;
  /// Value treated as a device sentinel; kept, but counted in the report.
  double sentinel = 999.9;
};

struct IngestReport {
  std::size_t n_rows = 0;
  std::size_t n_valid = 0;
  std::size_t n_skipped = 0;
  std::size_t n_sentinel = 0;
  std::size_t n_prefiltered = 0;
  std::size_t n_outside_bbox = 0;
  /// Up to the first 20 skip reasons as "line N: reason".
  std::vector<std::string> skip_reasons;
  /// Civil date of day index 0 when timestamps were calendar dates.
  std::string origin;
};

struct Ingested {
  std::vector<StationRecord> records;
  FidelityDataset dataset;
  IngestReport report;
};

/// Parses timestamps as plain numbers (used as is) or ISO-8601 dates and
/// datetimes (YYYY-MM-DD[THH:MM[:SS]][Z]), which become days since the
/// earliest date in the file. Rows with unparsable or non-finite fields are
/// skipped and counted. Throws IoError on a missing required column and
/// InvalidArgument when no valid row remains.
Ingested read_station_csv(std::istream& in, const IngestOptions& options = {});
Ingested read_station_csv(const std::string& path, const IngestOptions& options = {});

/// Station-major, time-fastest dataset from records. Station ids are assigned
/// in lexicographic order of the station names.
FidelityDataset records_to_dataset(const std::vector<StationRecord>& records);

/// station_id,lon,lat,t,value,fidelity with round-trip precision.
void write_dataset_csv(const FidelityDataset& data, std::ostream& out);
void write_dataset_csv(const FidelityDataset& data, const std::string& path);

struct Site {
  std::string id;
  double lon = 0.0;
  double lat = 0.0;
};

/// Union over HF sites of the k nearest LF sites (Euclidean in lon/lat, ties by
/// id), deduplicated and sorted by id.
std::vector<Site> nearest_lf_selection(const std::vector<Site>& hf_sites, const std::vector<Site>& lf_sites,
                                       int k = 15);

/// Distinct sites of one fidelity in a dataset.
std::vector<Site> dataset_sites(const FidelityDataset& data, Fidelity fidelity);

/// Keeps only LF rows of the listed station names.
FidelityDataset keep_lf_sites(const FidelityDataset& data, const std::vector<Site>& sites);

/// s1,s2,t,mean,sd
void write_prediction_csv(const Prediction& pred, const std::string& path);
/// lon,lat,t,mean,sd, one row per cell and time.
void write_grid_csv(const GridPrediction& grid, const std::string& path);
/// lon,lat,temporal_mean,temporal_sd,mean_sd
void write_grid_summary_csv(const GridPrediction& grid, const std::string& path);

std::string params_to_json(const ModelParams& theta);
ModelParams params_from_json(const std::string& text);
void write_params_json(const ModelParams& theta, const std::string& path);
ModelParams read_params_json(const std::string& path);

/// Query points from a CSV with columns s1,s2,t (or lon,lat,t).
std::vector<SpaceTimePoint> read_points_csv(const std::string& path);

/// 64-bit FNV-1a digest as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string config_text;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> outputs;
  std::map<std::string, std::string> extra;
};

/// JSON with the command, arguments, config hash, seed, outputs and library versions.
std::string manifest_json(const RunManifest& manifest);
void write_manifest(const RunManifest& manifest, const std::string& path);

std::string read_text_file(const std::string& path);

}  // namespace rmfgp
