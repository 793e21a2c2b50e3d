#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "rmfgp/error.hpp"
#include "rmfgp/evaluation.hpp"
#include "rmfgp/fit.hpp"
#include "rmfgp/simulation.hpp"

using namespace rmfgp;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

FidelityDataset panel(int n_hf, int n_lf, int days, std::uint64_t seed = 2) {
  return simulate_panel(make_panel_config(BoundingBox{9.7, 10.15, 53.49, 53.62}, n_hf, n_lf, days, seed)).data;
}

}  // namespace

TEST(Metrics, Values) {
  EXPECT_DOUBLE_EQ(mae(vec({1, 2}), vec({3, 2})), 1.0);
  EXPECT_NEAR(rmse(vec({0, 0}), vec({3, 4})), std::sqrt(12.5), 1e-15);
  EXPECT_EQ(mae(vec({1.5}), vec({1.5})), 0.0);
  EXPECT_THROW(mae(vec({1}), vec({1, 2})), InvalidArgument);
  EXPECT_THROW(rmse(Eigen::VectorXd(), Eigen::VectorXd()), InvalidArgument);
}

TEST(Metrics, RmseDominatesMae) {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd a(9), b(9);
    for (int i = 0; i < 9; ++i) {
      a[i] = z(rng);
      b[i] = z(rng);
    }
    EXPECT_GE(rmse(a, b) + 1e-15, mae(a, b));
  }
}

TEST(RelativeEfficiency, PublishedRows) {
  EXPECT_NEAR(relative_efficiency(2.213, 1.395), 2.52, 0.01);
  EXPECT_NEAR(relative_efficiency(0.758, 1.241), 0.37, 0.01);
  EXPECT_DOUBLE_EQ(relative_efficiency(2.0, 2.0), 1.0);
  EXPECT_THROW(relative_efficiency(1.0, 0.0), InvalidArgument);
}

TEST(EnumerateFolds, SingleWindowTwoStations) {
  const FidelityDataset d = panel(2, 2, 30);
  int n_windows = 0;
  const auto folds = enumerate_folds(d, 30.0, nullptr, &n_windows);
  EXPECT_EQ(n_windows, 1);
  ASSERT_EQ(folds.size(), 2u);
  EXPECT_LT(folds[0].holdout_station, folds[1].holdout_station);
}

TEST(EnumerateFolds, ElevenWindowsFourStations) {
  const FidelityDataset d = panel(4, 3, 330);
  int n_windows = 0;
  const auto folds = enumerate_folds(d, 30.0, nullptr, &n_windows);
  EXPECT_EQ(n_windows, 11);
  ASSERT_EQ(folds.size(), 44u);
  for (std::size_t k = 0; k < folds.size(); ++k) {
    EXPECT_EQ(folds[k].window_index, static_cast<int>(k / 4) + 1);
    if (k % 4) EXPECT_GT(folds[k].holdout_station, folds[k - 1].holdout_station);
  }
}

TEST(EnumerateFolds, PartialTrailingWindowDropped) {
  int n_windows = 0;
  enumerate_folds(panel(2, 2, 75), 30.0, nullptr, &n_windows);
  EXPECT_EQ(n_windows, 2);
  EXPECT_THROW(enumerate_folds(panel(2, 2, 20), 30.0), InvalidArgument);
  EXPECT_THROW(enumerate_folds(panel(1, 2, 60), 30.0), InvalidArgument);
}

TEST(EnumerateFolds, PartitionWithinWindow) {
  const FidelityDataset d = panel(3, 2, 60);
  const auto folds = enumerate_folds(d, 30.0);
  ASSERT_EQ(folds.size(), 6u);
  for (const auto& f : folds) {
    std::set<std::size_t> test(f.test_rows.begin(), f.test_rows.end());
    for (std::size_t i : f.train_hf_rows) EXPECT_FALSE(test.count(i));
    for (std::size_t i : f.test_rows) {
      EXPECT_EQ(d.hf_station[i], f.holdout_station);
      EXPECT_GE(d.hf_points[i].t, f.t_begin);
      EXPECT_LT(d.hf_points[i].t, f.t_end);
    }
    EXPECT_EQ(f.test_rows.size() + f.train_hf_rows.size(), 90u);
    EXPECT_EQ(f.train_lf_rows.size(), 60u);
  }
  // Each window's test sets cover every HF row of that window exactly once.
  std::set<std::size_t> all;
  for (const auto& f : folds) all.insert(f.test_rows.begin(), f.test_rows.end());
  EXPECT_EQ(all.size(), d.n_hf());
}

TEST(StBlockCv, StructureAndMetricIdentities) {
  const FidelityDataset d = panel(3, 2, 30);
  FitOptions opt;
  opt.optimizer.max_iter = 5;
  const std::vector<CvModel> models{{"a", opt, PredictorKind::plug_in, heuristic_init},
                                    {"b", opt, PredictorKind::huber_weighted, heuristic_init}};
  const CVReport r = st_block_cv(d, 30.0, models, 1);
  ASSERT_EQ(r.folds.size(), 3u);
  ASSERT_EQ(r.results.size(), 6u);
  EXPECT_EQ(r.results[0].model, "a");
  EXPECT_EQ(r.results[1].model, "b");
  for (const auto& fr : r.results) {
    EXPECT_FALSE(fr.failed) << fr.message;
    EXPECT_GE(fr.rmse + 1e-12, fr.mae);
    EXPECT_EQ(fr.n_test, 30);
  }
  ASSERT_EQ(r.windows.size(), 2u);
  EXPECT_NEAR(r.windows[0].mae, (r.results[0].mae + r.results[2].mae + r.results[4].mae) / 3.0, 1e-14);
}

TEST(Describe, Values) {
  const DescriptiveRow r = describe("g", {1.0, 2.0, 3.0});
  EXPECT_EQ(r.count, 3u);
  EXPECT_EQ(r.min, 1.0);
  EXPECT_EQ(r.max, 3.0);
  EXPECT_DOUBLE_EQ(r.mean, 2.0);
  EXPECT_NEAR(r.std_error, 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(r.ci_upper - r.mean, 1.96 / std::sqrt(3.0), 1e-14);
  EXPECT_THROW(describe("e", {}), InvalidArgument);
  const DescriptiveRow one = describe("o", {4.0});
  EXPECT_TRUE(std::isnan(one.std_error));
}

TEST(Describe, GroupsAndHeaders) {
  const auto rows = descriptive_stats({{"b", {1.0}}, {"a", {2.0, 4.0}}});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].group, "a");
  EXPECT_EQ(descriptive_headers().size(), 8u);
}

TEST(ParallelFor, RunsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 3, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(4, 2, [](int i) {
                 if (i == 2) throw NumericalError("boom");
               }),
               NumericalError);
}
