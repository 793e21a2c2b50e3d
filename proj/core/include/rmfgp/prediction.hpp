#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmfgp/covariance.hpp"
#include "rmfgp/dataset.hpp"

namespace rmfgp {

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  std::vector<SpaceTimePoint> points;
  /// Number of negative round-off variances set to zero.
  int n_clamped = 0;
};

/// Per-observation weights in (0, 1]; the noise variance of row i becomes
/// tau^2 / w_i. Empty vectors mean unit weights.
struct ObservationWeights {
  Eigen::VectorXd lf;
  Eigen::VectorXd hf;
};

/// Gaussian conditioning of the latent process of `target` fidelity on all
/// LF and HF observations.
Prediction predict(const FidelityDataset& data, const ModelParams& theta,
                   std::span<const SpaceTimePoint> query, Fidelity target,
                   const ObservationWeights& weights = {});

Prediction predict_hf(const FidelityDataset& data, const ModelParams& theta,
                      std::span<const SpaceTimePoint> query, const ObservationWeights& weights = {});

/// Weights of the posterior mode under a Huber observation likelihood with
/// threshold c (in noise standard deviations), found by iteratively reweighted
/// Gaussian conditioning. Rows whose noise variance is zero keep weight 1.
ObservationWeights huber_observation_weights(const FidelityDataset& data, const ModelParams& theta,
                                             double c, int max_iter = 50, double tol = 1e-8);

enum class PredictorKind { plug_in, huber_weighted };

struct BoundingBox {
  double lon_min = 0.0;
  double lon_max = 1.0;
  double lat_min = 0.0;
  double lat_max = 1.0;

  void validate() const;
  bool contains(double lon, double lat) const;
  /// "lon_min,lon_max,lat_min,lat_max"
  static BoundingBox parse(const std::string& text);
};

struct GridCell {
  double lon = 0.0;
  double lat = 0.0;
  double temporal_mean = 0.0;  // mean over times of the predicted mean
  double temporal_sd = 0.0;    // standard deviation over times of the predicted mean
  double mean_sd = 0.0;        // average predictive standard deviation
};

struct GridPrediction {
  int n_lon = 0;
  int n_lat = 0;
  std::vector<double> times;
  /// Cells row-major (latitude rows, longitude fastest), times fastest within a cell.
  Prediction field;
  std::vector<GridCell> cells;
};

/// Predicts the HF field at cell centers of an n_lon x n_lat grid for each time.
GridPrediction krige_grid(const FidelityDataset& data, const ModelParams& theta, const BoundingBox& bbox,
                          int n_lon, int n_lat, const std::vector<double>& times,
                          const ObservationWeights& weights = {});

}  // namespace rmfgp
