#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "scp/error.hpp"
#include "scp/hungarian.hpp"
#include "scp/metrics.hpp"
#include "scp/report.hpp"

namespace scp {
namespace {

using Labels = std::vector<Label>;

Labels random_labels(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::uniform_int_distribution<Label> d(0, static_cast<Label>(k - 1));
  Labels out(n);
  for (auto& l : out) l = d(rng);
  return out;
}

Labels relabel(const Labels& in, const std::vector<Label>& map) {
  Labels out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = map[in[i]];
  return out;
}

TEST(Hungarian, MatchesBruteForceOnCostMatrices) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + trial % 6;
    Eigen::MatrixXd cost(n, n);
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = u(rng);
    const auto a = solve_min_cost_assignment(cost);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
      double c = 0;
      for (Eigen::Index i = 0; i < n; ++i) c += cost(i, perm[i]);
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(a.cost, best, 1e-9);
    double check = 0;
    for (Eigen::Index i = 0; i < n; ++i) check += cost(i, a.row_to_col[i]);
    EXPECT_NEAR(check, a.cost, 1e-9);
  }
}

TEST(Hungarian, Rectangular) {
  Eigen::MatrixXd w(2, 3);
  w << 1, 7, 3,
       5, 6, 0;
  const auto a = solve_max_weight_assignment(w);
  EXPECT_EQ(a.row_to_col[0], 1);
  EXPECT_EQ(a.row_to_col[1], 0);
  Eigen::MatrixXd t = w.transpose();
  const auto b = solve_max_weight_assignment(t);
  EXPECT_EQ(b.row_to_col[1], 0);
  EXPECT_EQ(b.row_to_col[0], 1);
  EXPECT_EQ(b.row_to_col[2], -1);
}

TEST(Acc, IdentityAndPermutation) {
  const Labels t{0, 0, 1, 1, 2, 2, 2};
  EXPECT_EQ(hungarian_acc(t, t), 1.0);
  EXPECT_EQ(hungarian_acc(relabel(t, {2, 0, 1}), t), 1.0);
  EXPECT_EQ(hungarian_acc(relabel(t, {7, 3, 9}), t), 1.0);
}

TEST(Acc, MatchesBruteForce) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + trial % 5;
    const std::size_t n = 12 + trial % 20;
    const auto pred = random_labels(n, k, rng);
    const auto truth = random_labels(n, k, rng);
    EXPECT_EQ(hungarian_acc(pred, truth), oracle::brute_force_acc(pred, truth, k)) << trial;
  }
}

TEST(Acc, Mapping) {
  const Labels pred{5, 5, 9, 9, 9};
  const Labels truth{1, 1, 0, 0, 1};
  const auto r = hungarian_acc_detailed(pred, truth);
  EXPECT_DOUBLE_EQ(r.acc, 0.8);
  EXPECT_EQ(r.mapping.at(5), 1u);
  EXPECT_EQ(r.mapping.at(9), 0u);
}

TEST(Acc, LowerBound) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t kt = 2 + trial % 6;
    const std::size_t kp = 1 + trial % kt;
    const std::size_t n = 20 + trial % 17;
    const auto truth = random_labels(n, kt, rng);
    auto pred = random_labels(n, kp, rng);
    for (std::size_t c = 0; c < kp; ++c) pred[c] = static_cast<Label>(c);  // surjective
    EXPECT_GE(hungarian_acc(pred, truth) + 1e-12, 1.0 / static_cast<double>(kt));
  }
}

TEST(Acc, Errors) {
  EXPECT_THROW(hungarian_acc(Labels{0, 1}, Labels{0}), ShapeError);
  EXPECT_THROW(hungarian_acc(Labels{}, Labels{}), MetricError);
}

TEST(Nmi, ClosedForms) {
  const Labels t{0, 0, 1, 1, 2};
  EXPECT_NEAR(nmi(t, t), 1.0, 1e-12);
  EXPECT_EQ(nmi(Labels{0, 0, 0, 0}, Labels{0, 0, 1, 1}), 0.0);
  EXPECT_EQ(nmi(Labels{3, 3, 3}, Labels{1, 1, 1}), 1.0);
}

TEST(Nmi, HandComputedTable) {
  const Labels pred{0, 0, 1, 1, 2, 2};
  const Labels truth{0, 0, 1, 1, 1, 1};
  // Truth is a function of pred, so I = H(truth) and NMI = sqrt(H(truth) / H(pred)).
  const double h_true = -(1.0 / 3 * std::log(1.0 / 3) + 2.0 / 3 * std::log(2.0 / 3));
  const double h_pred = std::log(3.0);
  EXPECT_NEAR(nmi(pred, truth), std::sqrt(h_true / h_pred), 1e-10);
}

TEST(Nmi, Range) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const double v = nmi(random_labels(30, 4, rng), random_labels(30, 3, rng));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Ari, ClosedForms) {
  const Labels t{0, 0, 1, 1, 2};
  EXPECT_NEAR(ari(t, t), 1.0, 1e-12);
  // All cells 1 in a 2x2 table: index 0, expected 2/3, max 2.
  EXPECT_NEAR(ari(Labels{0, 0, 1, 1}, Labels{0, 1, 0, 1}), -0.5, 1e-10);
  EXPECT_EQ(ari(Labels{0, 1, 2}, Labels{5, 6, 7}), 1.0);  // all singletons
  EXPECT_EQ(ari(Labels{4, 4, 4}, Labels{0, 0, 0}), 1.0);  // single cluster
  EXPECT_EQ(ari(Labels{4, 4, 4}, Labels{0, 1, 2}), 0.0);
}

TEST(Ari, HandComputedTable) {
  const Labels pred{0, 0, 1, 1, 2, 2};
  const Labels truth{0, 0, 1, 1, 1, 1};
  // index = 3 C(2,2) = 3; rows sum 3; cols C(2,2)+C(4,2) = 7; total C(6,2) = 15.
  const double expected = 3.0 * 7.0 / 15.0;
  const double max = 0.5 * (3.0 + 7.0);
  EXPECT_NEAR(ari(pred, truth), (3.0 - expected) / (max - expected), 1e-10);
}

TEST(Ari, MonteCarloNull) {
  Labels truth(60);
  for (std::size_t i = 0; i < 60; ++i) truth[i] = static_cast<Label>(i % 3);
  double sum = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    sum += ari(random_labels(60, 3, rng), truth);
  }
  EXPECT_LT(std::abs(sum / 200), 0.05);
}

TEST(Ari, Errors) {
  EXPECT_THROW(ari(Labels{0}, Labels{0}), MetricError);
  EXPECT_THROW(ari(Labels{0, 1}, Labels{0, 1, 1}), ShapeError);
  EXPECT_THROW(nmi(Labels{0, 1}, Labels{0, 1, 1}), ShapeError);
}

TEST(Metrics, RelabelInvariance) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pred = random_labels(40, 4, rng);
    const auto truth = random_labels(40, 5, rng);
    const auto p2 = relabel(pred, {11, 2, 40, 0});
    const auto t2 = relabel(truth, {3, 1, 4, 0, 2});
    EXPECT_DOUBLE_EQ(hungarian_acc(pred, truth), hungarian_acc(p2, t2));
    EXPECT_NEAR(nmi(pred, truth), nmi(p2, t2), 1e-12);
    EXPECT_NEAR(ari(pred, truth), ari(p2, t2), 1e-12);
  }
}

TEST(Contingency, CanonicalIds) {
  const auto t = contingency(Labels{9, 2, 9, 4}, Labels{1, 1, 0, 0});
  EXPECT_EQ(t.pred_ids, (std::vector<Label>{2, 4, 9}));
  EXPECT_EQ(t.true_ids, (std::vector<Label>{0, 1}));
  EXPECT_EQ(t.n, 4u);
  EXPECT_EQ(t.counts.sum(), 4);
  EXPECT_EQ(t.counts(2, 0), 1);
  EXPECT_EQ(t.counts(2, 1), 1);
  EXPECT_EQ(t.counts(0, 1), 1);
}

TEST(Report, UniformTiesToZero) {
  const Eigen::MatrixXd probs = Eigen::MatrixXd::Constant(10, 4, 0.25);
  const auto r = cluster_report(probs, std::nullopt);
  EXPECT_TRUE(std::all_of(r.hard_labels.begin(), r.hard_labels.end(), [](Label l) { return l == 0; }));
  EXPECT_TRUE(r.collapsed);
  EXPECT_EQ(r.empty_clusters, 3u);
  EXPECT_EQ(r.occupancy, (std::vector<std::size_t>{10, 0, 0, 0}));
  EXPECT_FALSE(r.acc.has_value());
}

TEST(Report, PerfectOneHot) {
  Labels truth{0, 1, 2, 0, 1, 2};
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(6, 3);
  for (std::size_t i = 0; i < 6; ++i) probs(static_cast<Eigen::Index>(i), (truth[i] + 1) % 3) = 1.0;
  const auto r = cluster_report(probs, truth);
  EXPECT_FALSE(r.collapsed);
  EXPECT_EQ(*r.acc, 1.0);
  EXPECT_NEAR(*r.nmi, 1.0, 1e-12);
  EXPECT_NEAR(*r.ari, 1.0, 1e-12);
}

TEST(Report, CollapseThreshold) {
  // 10 items, 2 clusters: 9 in one is exactly 90%, not above it.
  Labels hard(10, 0);
  hard[9] = 1;
  EXPECT_FALSE(report_from_labels(hard, 2, std::nullopt).collapsed);
  hard[9] = 0;
  hard.push_back(1);
  hard.push_back(0);  // 11 of 12
  EXPECT_TRUE(report_from_labels(hard, 2, std::nullopt).collapsed);
}

TEST(Report, Serializations) {
  const auto r = report_from_labels(Labels{0, 1, 1, 0}, 3, Labels{0, 1, 1, 0});
  const auto j = to_json(r);
  EXPECT_EQ(j["n_items"], 4);
  EXPECT_EQ(j["empty_clusters"], 1);
  EXPECT_EQ(j["collapsed"], true);
  EXPECT_EQ(j["acc"], 1.0);
  const auto kv = to_key_value(r);
  EXPECT_NE(kv.find("n_clusters=3\n"), std::string::npos);
  EXPECT_NE(kv.find("occupancy=2,2,0\n"), std::string::npos);
  EXPECT_NE(kv.find("acc="), std::string::npos);
  const auto no_truth = to_json(report_from_labels(Labels{0, 1}, 2, std::nullopt));
  EXPECT_FALSE(no_truth.contains("acc"));
  EXPECT_FALSE(to_table(r).empty());
}

}  // namespace
}  // namespace scp
