#pragma once

// Clustering objective on two batches of soft assignments (rows are the two
// views of the same items): pairwise cross-entropy, confidence loss, the
// entropy of the batch-mean assignments, and their combination
//
//   l_clu = l_e + l_con - alpha * entropy.
//
// l_con and the entropy use the batch sum and batch means as written; l_e can
// be taken as the batch sum or divided by the batch size (the default inside
// l_clu, see LossOptions). Values and gradients are computed in double
// precision regardless of the head's scalar type.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "scp/error.hpp"
#include "scp/linalg.hpp"

namespace scp {

/// Lower clamp applied inside every logarithm, never to probabilities themselves.
inline constexpr double kLogClamp = 1e-12;

using ProbMatrix = Eigen::MatrixXd;

struct LossTerm {
  double value = 0.0;
  ProbMatrix grad_a;  // d value / d ya
  ProbMatrix grad_b;  // d value / d yb
};

struct MeanAssignment {
  Eigen::VectorXd p_a;
  Eigen::VectorXd p_b;
};

struct EntropyTerm : LossTerm {
  MeanAssignment means;
};

struct LossBreakdown {
  double l_e = 0.0;
  double l_con = 0.0;
  double entropy = 0.0;
  double l_clu = 0.0;
  double alpha = 0.0;
};

enum class Reduction { sum, mean };

inline std::string_view to_string(Reduction r) { return r == Reduction::sum ? "sum" : "mean"; }

inline Reduction parse_reduction(std::string_view name) {
  if (name == "sum") return Reduction::sum;
  if (name == "mean") return Reduction::mean;
  throw ConfigError("unknown reduction '" + std::string(name) + "' (expected sum or mean)");
}

struct LossOptions {
  double alpha = 1.0;
  bool symmetrize_le = false;  // average both directions of l_e
  Reduction le_reduction = Reduction::mean;
};

struct CombinedLoss {
  LossBreakdown breakdown;
  ProbMatrix grad_a;
  ProbMatrix grad_b;
};

namespace detail {

inline double clamped_log(double p) { return std::log(std::max(p, kLogClamp)); }

// Derivative of log(max(p, eps)); zero on the clamped branch.
inline double clamped_log_grad(double p) { return p > kLogClamp ? 1.0 / p : 0.0; }

inline void require_same_shape(const ProbMatrix& ya, const ProbMatrix& yb, const char* what) {
  if (ya.rows() != yb.rows() || ya.cols() != yb.cols()) {
    throw ShapeError(std::string(what) + ": assignment batches differ in shape (" +
                     std::to_string(ya.rows()) + "x" + std::to_string(ya.cols()) + " vs " +
                     std::to_string(yb.rows()) + "x" + std::to_string(yb.cols()) + ")");
  }
}

}  // namespace detail

/// l_e = -sum_i sum_k ya[i,k] log yb[i,k]. Directional: ya is the target.
/// With Reduction::mean the batch sum is divided by B.
inline LossTerm loss_e(const ProbMatrix& ya, const ProbMatrix& yb,
                       Reduction reduction = Reduction::sum) {
  detail::require_same_shape(ya, yb, "loss_e");
  LossTerm t;
  const ProbMatrix log_b = yb.unaryExpr([](double p) { return detail::clamped_log(p); });
  t.value = -ya.cwiseProduct(log_b).sum();
  t.grad_a = -log_b;
  t.grad_b = -ya.cwiseProduct(yb.unaryExpr([](double p) { return detail::clamped_log_grad(p); }));
  if (reduction == Reduction::mean && ya.rows() > 0) {
    const double inv = 1.0 / static_cast<double>(ya.rows());
    t.value *= inv;
    t.grad_a *= inv;
    t.grad_b *= inv;
  }
  return t;
}

/// l_con = -log sum_i <ya_i, yb_i>.
inline LossTerm loss_con(const ProbMatrix& ya, const ProbMatrix& yb) {
  detail::require_same_shape(ya, yb, "loss_con");
  if (ya.rows() == 0) throw ShapeError("loss_con: empty batch");
  LossTerm t;
  const double inner = ya.cwiseProduct(yb).sum();
  t.value = -detail::clamped_log(inner);
  const double scale = -detail::clamped_log_grad(inner);
  t.grad_a = scale * yb;
  t.grad_b = scale * ya;
  return t;
}

/// Sum of the entropies of the two batch-mean assignment vectors; 0 log 0 is
/// taken as 0 through the log clamp.
inline EntropyTerm entropy_reg(const ProbMatrix& ya, const ProbMatrix& yb) {
  if (ya.rows() == 0 || yb.rows() == 0) throw ShapeError("entropy_reg: empty batch");
  if (ya.cols() != yb.cols()) throw ShapeError("entropy_reg: batches differ in cluster count");

  EntropyTerm t;
  t.means.p_a = ya.colwise().mean().transpose();
  t.means.p_b = yb.colwise().mean().transpose();

  auto side = [](const Eigen::VectorXd& mean, Eigen::Index rows, double& value) {
    // d/dp [-p log(max(p, eps))] = -(log p + 1) above the clamp, -log eps below.
    Eigen::RowVectorXd dmean(mean.size());
    for (Eigen::Index k = 0; k < mean.size(); ++k) {
      const double p = mean(k);
      value -= p * detail::clamped_log(p);
      dmean(k) = p > kLogClamp ? -(std::log(p) + 1.0) : -std::log(kLogClamp);
    }
    return ProbMatrix(dmean.replicate(rows, 1) / static_cast<double>(rows));
  };
  t.value = 0.0;
  t.grad_a = side(t.means.p_a, ya.rows(), t.value);
  t.grad_b = side(t.means.p_b, yb.rows(), t.value);
  return t;
}

inline CombinedLoss loss_clu(const ProbMatrix& ya, const ProbMatrix& yb, const LossOptions& opts) {
  if (!(opts.alpha >= 0.0)) {
    throw ConfigError("alpha must be >= 0, got " + std::to_string(opts.alpha));
  }
  detail::require_same_shape(ya, yb, "loss_clu");

  LossTerm le = loss_e(ya, yb, opts.le_reduction);
  if (opts.symmetrize_le) {
    const LossTerm rev = loss_e(yb, ya, opts.le_reduction);
    le.value = 0.5 * (le.value + rev.value);
    le.grad_a = 0.5 * (le.grad_a + rev.grad_b);
    le.grad_b = 0.5 * (le.grad_b + rev.grad_a);
  }
  const LossTerm con = loss_con(ya, yb);
  const EntropyTerm ent = entropy_reg(ya, yb);

  CombinedLoss out;
  out.breakdown.l_e = le.value;
  out.breakdown.l_con = con.value;
  out.breakdown.entropy = ent.value;
  out.breakdown.alpha = opts.alpha;
  out.breakdown.l_clu = le.value + con.value - opts.alpha * ent.value;
  out.grad_a = le.grad_a + con.grad_a - opts.alpha * ent.grad_a;
  out.grad_b = le.grad_b + con.grad_b - opts.alpha * ent.grad_b;
  return out;
}

inline CombinedLoss loss_clu(const ProbMatrix& ya, const ProbMatrix& yb, double alpha) {
  return loss_clu(ya, yb, LossOptions{alpha});
}

}  // namespace scp
