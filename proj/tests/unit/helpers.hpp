#pragma once

#include <random>
#include <vector>

#include "rmfgp/covariance.hpp"
#include "rmfgp/dataset.hpp"

namespace rmfgp::test {

inline FidelityDataset make_dataset(const std::vector<SpaceTimePoint>& xl, const std::vector<double>& yl,
                                    const std::vector<SpaceTimePoint>& xh, const std::vector<double>& yh) {
  FidelityDataset d;
  d.lf_points = xl;
  d.lf_values = Eigen::Map<const Eigen::VectorXd>(yl.data(), static_cast<Eigen::Index>(yl.size()));
  d.lf_station.assign(xl.size(), 0);
  d.hf_points = xh;
  d.hf_values = Eigen::Map<const Eigen::VectorXd>(yh.data(), static_cast<Eigen::Index>(yh.size()));
  d.hf_station.assign(xh.size(), 1);
  d.station_names = {"L0", "H1"};
  return d;
}

/// Five LF and four HF observations shared with the dense numpy reference.
inline FidelityDataset reference_instance() {
  return make_dataset({{0.379, 2.0, 1.173}, {1.67, 0.531, 0.225}, {1.572, 1.04, 1.873}, {1.289, 0.391, 1.017},
                       {1.355, 1.564, 0.573}},
                      {-0.203, 0.856, 0.202, 1.369, -0.408},
                      {{1.583, 0.843, 1.694}, {1.189, 0.314, 1.868}, {1.293, 0.256, 1.844}, {1.796, 0.691, 1.771}},
                      {0.756, 0.225, 1.697, -1.962});
}

inline ModelParams reference_params() {
  ModelParams t;
  t.rho = 0.7;
  t.kernel_L = {1.5, 0.9, 1.2, 0.8};
  t.kernel_delta = {0.5, 1.5, 0.7, 1.1};
  t.tau_L_sq = 0.2;
  t.tau_H_sq = 0.1;
  return t;
}

/// Lattice-generator parameters (variances 2.0 and 0.8, noise 0.3, rho 0.6).
inline ModelParams lattice_dgp_params() {
  ModelParams t;
  t.rho = 0.6;
  t.kernel_L = {2.0, 1.4965, 1.4965, 0.107};
  t.kernel_delta = {0.8, 3.122, 3.122, 0.107};
  t.tau_L_sq = 0.3;
  t.tau_H_sq = 0.3;
  return t;
}

/// Random small instance with n_l LF and n_h HF rows in [0, 2]^3.
inline FidelityDataset random_instance(int n_l, int n_h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::normal_distribution<double> z;
  std::vector<SpaceTimePoint> xl(n_l), xh(n_h);
  std::vector<double> yl(n_l), yh(n_h);
  for (auto& p : xl) p = {u(rng), u(rng), u(rng)};
  for (auto& p : xh) p = {u(rng), u(rng), u(rng)};
  for (auto& v : yl) v = z(rng);
  for (auto& v : yh) v = z(rng);
  return make_dataset(xl, yl, xh, yh);
}

inline ModelParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  ModelParams t;
  t.rho = 2.0 * u(rng) - 1.0;
  t.kernel_L = {u(rng), u(rng), u(rng), u(rng)};
  t.kernel_delta = {0.5 * u(rng), u(rng), u(rng), u(rng)};
  t.tau_L_sq = 0.2 * u(rng);
  t.tau_H_sq = 0.2 * u(rng);
  return t;
}

}  // namespace rmfgp::test
