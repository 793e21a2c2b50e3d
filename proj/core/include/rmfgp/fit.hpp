#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "rmfgp/covariance.hpp"
#include "rmfgp/dataset.hpp"
#include "rmfgp/estimation.hpp"
#include "rmfgp/optimizer.hpp"

namespace rmfgp {

/// Unconstrained coordinates: rho as is, every variance and length-scale on log scale.
enum ParamIndex : int {
  kRho = 0,
  kSigmaL,
  kLengthL1,
  kLengthL2,
  kLengthLt,
  kSigmaDelta,
  kLengthDelta1,
  kLengthDelta2,
  kLengthDeltat,
  kTauL,
  kTauH,
  kNumParams
};

std::string_view param_name(int index);

/// Maps parameters to the unconstrained vector. Zero noise variances are floored at 1e-12.
Eigen::VectorXd encode_params(const ModelParams& theta);
/// Inverse of encode_params; means are copied from `base`.
ModelParams decode_params(const Eigen::VectorXd& x, const ModelParams& base);

enum class LossKind { gaussian, huber };

std::string_view to_string(LossKind kind);
LossKind parse_loss(std::string_view text);

struct FitOptions {
  LossKind loss = LossKind::gaussian;
  HuberConfig huber;
  OptimizerOptions optimizer;
  /// Parameters at which the Huber threshold is resolved; init when empty.
  std::optional<ModelParams> delta_reference;
  /// Coordinates left at their initial values when false.
  std::array<bool, kNumParams> free = {true, true, true, true, true, true,
                                       true, true, true, true, true};
  /// Estimate constant means by centering (mean for gaussian, median for huber).
  bool center = false;
};

struct FitResult {
  ModelParams theta_hat;
  double objective = 0.0;
  int n_iter = 0;
  int n_eval = 0;
  bool converged = false;
  /// Huber threshold in whitened units; NaN for the gaussian loss.
  double delta_used = 0.0;
  double jitter_used = 0.0;
  std::string message;
};

/// Local quasi-Newton minimization of the Gaussian negative log-likelihood or
/// the robust objective, starting from `init`.
FitResult fit(const FidelityDataset& data, const ModelParams& init, const FitOptions& options);

/// Whitened HF innovations at theta, the residuals the Huber threshold is resolved from.
Eigen::VectorXd whitened_innovations(const FidelityDataset& data, const ModelParams& theta,
                                     const WhiteningMode& mode);

/// Data-driven starting point for data without known parameters. Variances
/// come from MAD scales (LF split 80/20 between signal and noise, HF residual
/// split 2/3 discrepancy, 1/3 noise), rho from the ratio of HF to LF scales,
/// spatial length-scales from the median inter-station distance and temporal
/// length-scales from three median sampling steps.
ModelParams heuristic_init(const FidelityDataset& data);

/// Constant means implied by centering: (mu_L, HF target mean).
std::pair<double, double> centering_means(const FidelityDataset& data, LossKind loss);

}  // namespace rmfgp
