#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "scp/error.hpp"
#include "scp/losses.hpp"

namespace scp {
namespace {

using oracle::Rows;

Eigen::MatrixXd uniform(Eigen::Index b, Eigen::Index k) {
  return Eigen::MatrixXd::Constant(b, k, 1.0 / static_cast<double>(k));
}

Eigen::MatrixXd one_hot(const std::vector<int>& cls, Eigen::Index k) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cls.size()), k);
  for (std::size_t i = 0; i < cls.size(); ++i) m(static_cast<Eigen::Index>(i), cls[i]) = 1.0;
  return m;
}

// Finite differences treat ya and yb entries as free variables; the losses
// are defined off the simplex too, which is what the analytic gradients are.
template <class F>
void expect_fd_grads(F value, const Eigen::MatrixXd& ya, const Eigen::MatrixXd& yb,
                     const Eigen::MatrixXd& ga, const Eigen::MatrixXd& gb) {
  const auto na = oracle::finite_diff([&](const Eigen::MatrixXd& a) { return value(a, yb); }, ya);
  const auto nb = oracle::finite_diff([&](const Eigen::MatrixXd& b) { return value(ya, b); }, yb);
  EXPECT_LT(oracle::max_rel_err(ga, na), 1e-4);
  EXPECT_LT(oracle::max_rel_err(gb, nb), 1e-4);
}

TEST(LossE, OneHotIsZero) {
  const auto y = one_hot({0, 2, 1, 2}, 3);
  EXPECT_EQ(loss_e(y, y).value, 0.0);
}

TEST(LossE, UniformIsLogK) {
  EXPECT_NEAR(loss_e(uniform(1, 4), uniform(1, 4)).value, std::log(4.0), 1e-12);
  EXPECT_NEAR(loss_e(uniform(7, 4), uniform(7, 4)).value, 7 * std::log(4.0), 1e-12);
  EXPECT_NEAR(loss_e(uniform(7, 4), uniform(7, 4), Reduction::mean).value, std::log(4.0), 1e-12);
}

TEST(LossE, MatchesScalarOracle) {
  Eigen::MatrixXd ya(2, 3), yb(2, 3);
  ya << 0.5, 0.3, 0.2, 0.1, 0.8, 0.1;
  yb << 0.6, 0.2, 0.2, 0.2, 0.7, 0.1;
  const auto t = loss_e(ya, yb);
  EXPECT_NEAR(t.value, oracle::loss_e(oracle::to_rows(ya), oracle::to_rows(yb)), 1e-10);

  // Hand gradients: d/dya = -log yb, d/dyb = -ya / yb.
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (Eigen::Index k = 0; k < 3; ++k) {
      EXPECT_NEAR(t.grad_a(i, k), -std::log(yb(i, k)), 1e-10);
      EXPECT_NEAR(t.grad_b(i, k), -ya(i, k) / yb(i, k), 1e-10);
    }
  }
  expect_fd_grads([](const auto& a, const auto& b) { return loss_e(a, b).value; }, ya, yb, t.grad_a,
                  t.grad_b);
}

TEST(LossE, MeanReductionScalesByBatch) {
  const auto ya = oracle::random_rows(6, 4, 1);
  const auto yb = oracle::random_rows(6, 4, 2);
  const auto s = loss_e(ya, yb, Reduction::sum);
  const auto m = loss_e(ya, yb, Reduction::mean);
  EXPECT_NEAR(m.value * 6, s.value, 1e-12);
  EXPECT_LT((m.grad_a * 6 - s.grad_a).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((m.grad_b * 6 - s.grad_b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LossE, NonNegativeAndZeroOnlyWhenTargetCovered) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    EXPECT_GE(loss_e(oracle::random_rows(5, 4, seed), oracle::random_rows(5, 4, seed + 100)).value, 0.0);
  }
  const auto a = one_hot({0, 1}, 3);
  const auto b = one_hot({0, 2}, 3);
  EXPECT_GT(loss_e(a, b).value, 0.0);
  EXPECT_TRUE(std::isfinite(loss_e(a, b).value));
}

TEST(LossE, Directional) {
  const auto ya = oracle::random_rows(4, 3, 3);
  const auto yb = oracle::random_rows(4, 3, 4);
  EXPECT_NE(loss_e(ya, yb).value, loss_e(yb, ya).value);
}

TEST(LossE, ShapeMismatch) {
  EXPECT_THROW(loss_e(uniform(2, 3), uniform(3, 3)), ShapeError);
  EXPECT_THROW(loss_e(uniform(2, 3), uniform(2, 4)), ShapeError);
}

TEST(LossCon, ClosedForms) {
  const auto y = one_hot({1}, 3);
  EXPECT_EQ(loss_con(y, y).value, 0.0);
  EXPECT_NEAR(loss_con(uniform(1, 4), uniform(1, 4)).value, std::log(4.0), 1e-12);
  // Batch sum inside the log: B uniform rows give ln K - ln B.
  EXPECT_NEAR(loss_con(uniform(8, 4), uniform(8, 4)).value, std::log(4.0) - std::log(8.0), 1e-12);
}

TEST(LossCon, MatchesOracleAndFiniteDifferences) {
  const auto ya = oracle::random_rows(3, 2, 5);
  const auto yb = oracle::random_rows(3, 2, 6);
  const auto t = loss_con(ya, yb);
  EXPECT_NEAR(t.value, oracle::loss_con(oracle::to_rows(ya), oracle::to_rows(yb)), 1e-10);
  expect_fd_grads([](const auto& a, const auto& b) { return loss_con(a, b).value; }, ya, yb, t.grad_a,
                  t.grad_b);
}

TEST(LossCon, Errors) {
  EXPECT_THROW(loss_con(uniform(0, 3), uniform(0, 3)), ShapeError);
  EXPECT_THROW(loss_con(uniform(2, 3), uniform(2, 2)), ShapeError);
}

TEST(Entropy, ClosedForms) {
  EXPECT_NEAR(entropy_reg(uniform(5, 10), uniform(3, 10)).value, 2 * std::log(10.0), 1e-12);
  const auto y = one_hot({2, 2, 2}, 4);
  EXPECT_EQ(entropy_reg(y, y).value, 0.0);
  const auto t = entropy_reg(one_hot({0, 1}, 2), one_hot({0, 1}, 2));
  EXPECT_NEAR(t.value, 2 * std::log(2.0), 1e-12);
  EXPECT_NEAR(t.means.p_a(0), 0.5, 1e-15);
  EXPECT_NEAR(t.means.p_b(1), 0.5, 1e-15);
}

TEST(Entropy, MatchesOracleAndFiniteDifferences) {
  const auto ya = oracle::random_rows(4, 3, 9);
  const auto yb = oracle::random_rows(4, 3, 10);
  const auto t = entropy_reg(ya, yb);
  EXPECT_NEAR(t.value, oracle::entropy(oracle::to_rows(ya), oracle::to_rows(yb)), 1e-10);
  expect_fd_grads([](const auto& a, const auto& b) { return entropy_reg(a, b).value; }, ya, yb,
                  t.grad_a, t.grad_b);
}

TEST(Entropy, Bounds) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const double h = entropy_reg(oracle::random_rows(6, 5, seed), oracle::random_rows(6, 5, seed + 7)).value;
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 2 * std::log(5.0) + 1e-12);
  }
}

TEST(Entropy, EmptyBatch) {
  EXPECT_THROW(entropy_reg(uniform(0, 3), uniform(2, 3)), ShapeError);
  EXPECT_THROW(entropy_reg(uniform(2, 3), uniform(2, 4)), ShapeError);
}

TEST(LossClu, AlphaZeroIsSum) {
  const auto ya = oracle::random_rows(5, 3, 1);
  const auto yb = oracle::random_rows(5, 3, 2);
  const auto r = loss_clu(ya, yb, 0.0).breakdown;
  EXPECT_EQ(r.l_clu, r.l_e + r.l_con);
}

TEST(LossClu, UniformSingleRowIsZero) {
  const auto r = loss_clu(uniform(1, 4), uniform(1, 4), 1.0).breakdown;
  EXPECT_NEAR(r.l_e, std::log(4.0), 1e-12);
  EXPECT_NEAR(r.l_con, std::log(4.0), 1e-12);
  EXPECT_NEAR(r.entropy, 2 * std::log(4.0), 1e-12);
  EXPECT_NEAR(r.l_clu, 0.0, 1e-12);
}

TEST(LossClu, ComponentSumOracle) {
  const auto ya = oracle::random_rows(8, 5, 13);
  const auto yb = oracle::random_rows(8, 5, 14);
  for (auto red : {Reduction::sum, Reduction::mean}) {
    const auto c = loss_clu(ya, yb, LossOptions{2.0, false, red});
    const auto e = loss_e(ya, yb, red);
    const auto n = loss_con(ya, yb);
    const auto h = entropy_reg(ya, yb);
    EXPECT_LT((c.grad_a - (e.grad_a + n.grad_a - 2.0 * h.grad_a)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((c.grad_b - (e.grad_b + n.grad_b - 2.0 * h.grad_b)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(c.breakdown.l_clu, e.value + n.value - 2.0 * h.value, 1e-12);
    EXPECT_EQ(c.breakdown.alpha, 2.0);
  }
}

TEST(LossClu, FiniteDifferences) {
  const auto ya = oracle::random_rows(6, 4, 21);
  const auto yb = oracle::random_rows(6, 4, 22);
  for (bool sym : {false, true}) {
    const LossOptions opts{1.5, sym};
    const auto c = loss_clu(ya, yb, opts);
    expect_fd_grads([&](const auto& a, const auto& b) { return loss_clu(a, b, opts).breakdown.l_clu; },
                    ya, yb, c.grad_a, c.grad_b);
  }
}

TEST(LossClu, SymmetrizedAveragesDirections) {
  const auto ya = oracle::random_rows(6, 4, 31);
  const auto yb = oracle::random_rows(6, 4, 32);
  const LossOptions opts{1.0, true, Reduction::sum};
  const double expected = 0.5 * (loss_e(ya, yb).value + loss_e(yb, ya).value);
  EXPECT_NEAR(loss_clu(ya, yb, opts).breakdown.l_e, expected, 1e-12);
  EXPECT_NEAR(loss_clu(ya, yb, opts).breakdown.l_e, loss_clu(yb, ya, opts).breakdown.l_e, 1e-12);
}

TEST(LossClu, NegativeAlpha) { EXPECT_THROW(loss_clu(uniform(2, 2), uniform(2, 2), -0.5), ConfigError); }

TEST(LossClu, RowPermutationInvariance) {
  const auto ya = oracle::random_rows(7, 4, 41);
  const auto yb = oracle::random_rows(7, 4, 42);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(7);
  perm.setIdentity();
  std::mt19937 rng(3);
  std::shuffle(perm.indices().data(), perm.indices().data() + 7, rng);
  const Eigen::MatrixXd pa = perm * ya;
  const Eigen::MatrixXd pb = perm * yb;
  const auto r1 = loss_clu(ya, yb, 1.3).breakdown;
  const auto r2 = loss_clu(pa, pb, 1.3).breakdown;
  EXPECT_NEAR(r1.l_e, r2.l_e, 1e-12);
  EXPECT_NEAR(r1.l_con, r2.l_con, 1e-12);
  EXPECT_NEAR(r1.entropy, r2.entropy, 1e-12);
  EXPECT_NEAR(r1.l_clu, r2.l_clu, 1e-12);
}

TEST(LossClu, ClusterPermutationInvariance) {
  const auto ya = oracle::random_rows(7, 5, 51);
  const auto yb = oracle::random_rows(7, 5, 52);
  std::vector<Eigen::Index> cols{3, 0, 4, 1, 2};
  Eigen::MatrixXd pa(7, 5), pb(7, 5);
  for (Eigen::Index k = 0; k < 5; ++k) {
    pa.col(k) = ya.col(cols[k]);
    pb.col(k) = yb.col(cols[k]);
  }
  const auto r1 = loss_clu(ya, yb, 2.0).breakdown;
  const auto r2 = loss_clu(pa, pb, 2.0).breakdown;
  EXPECT_NEAR(r1.l_e, r2.l_e, 1e-12);
  EXPECT_NEAR(r1.l_con, r2.l_con, 1e-12);
  EXPECT_NEAR(r1.entropy, r2.entropy, 1e-12);
  EXPECT_NEAR(r1.l_clu, r2.l_clu, 1e-12);
}

TEST(LossClu, SaturatedInputsStayFinite) {
  const auto a = one_hot({0, 1, 2}, 4);
  const auto b = one_hot({1, 2, 3}, 4);
  const auto c = loss_clu(a, b, 1.0);
  EXPECT_TRUE(std::isfinite(c.breakdown.l_clu));
  EXPECT_TRUE(c.grad_a.allFinite());
  EXPECT_TRUE(c.grad_b.allFinite());
}

}  // namespace
}  // namespace scp
