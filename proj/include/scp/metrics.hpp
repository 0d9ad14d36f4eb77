#pragma once

// External clustering metrics (Hungarian-matched accuracy, NMI, ARI) on
// arbitrary integer label ids, computed from a contingency table.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scp/error.hpp"
#include "scp/hungarian.hpp"
#include "scp/linalg.hpp"

namespace scp {

using Label = std::uint32_t;

/// counts(p, t) = number of items with the p-th distinct predicted id and the
/// t-th distinct true id; ids are ranked in increasing order.
struct ContingencyTable {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  std::vector<Label> pred_ids;
  std::vector<Label> true_ids;
  std::int64_t n = 0;

  Eigen::Index pred_clusters() const { return counts.rows(); }
  Eigen::Index true_classes() const { return counts.cols(); }
};

namespace detail {

inline void require_same_length(std::span<const Label> pred, std::span<const Label> truth,
                                const char* metric) {
  if (pred.size() != truth.size()) {
    throw ShapeError(std::string(metric) + ": label arrays differ in length (" +
                     std::to_string(pred.size()) + " vs " + std::to_string(truth.size()) + ")");
  }
}

inline std::vector<std::size_t> canonicalize(std::span<const Label> labels, std::vector<Label>& ids) {
  std::map<Label, std::size_t> index;
  for (Label l : labels) index.emplace(l, 0);
  ids.clear();
  for (auto& [id, slot] : index) {
    slot = ids.size();
    ids.push_back(id);
  }
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = index[labels[i]];
  return out;
}

inline double choose2(double x) { return x * (x - 1.0) / 2.0; }

inline double entropy_of_counts(const Eigen::VectorXd& counts, double n) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts(i) > 0) {
      const double p = counts(i) / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace detail

inline ContingencyTable contingency(std::span<const Label> pred, std::span<const Label> truth) {
  detail::require_same_length(pred, truth, "contingency");
  ContingencyTable t;
  const auto p = detail::canonicalize(pred, t.pred_ids);
  const auto q = detail::canonicalize(truth, t.true_ids);
  t.counts.setZero(static_cast<Eigen::Index>(t.pred_ids.size()),
                   static_cast<Eigen::Index>(t.true_ids.size()));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++t.counts(static_cast<Eigen::Index>(p[i]), static_cast<Eigen::Index>(q[i]));
  }
  t.n = static_cast<std::int64_t>(pred.size());
  return t;
}

struct AccuracyResult {
  double acc = 0.0;
  std::map<Label, Label> mapping;  // predicted id -> matched true id
};

/// Accuracy under the best one-to-one mapping of predicted clusters to classes.
inline AccuracyResult hungarian_acc_detailed(std::span<const Label> pred,
                                             std::span<const Label> truth) {
  detail::require_same_length(pred, truth, "hungarian_acc");
  if (pred.empty()) throw MetricError("hungarian_acc: needs at least one sample");
  const auto t = contingency(pred, truth);
  const Assignment a = solve_max_weight_assignment(t.counts.cast<double>());
  AccuracyResult r;
  double matched = 0.0;
  for (std::size_t row = 0; row < a.row_to_col.size(); ++row) {
    const auto col = a.row_to_col[row];
    if (col < 0) continue;
    matched += static_cast<double>(t.counts(static_cast<Eigen::Index>(row), col));
    r.mapping[t.pred_ids[row]] = t.true_ids[static_cast<std::size_t>(col)];
  }
  r.acc = matched / static_cast<double>(t.n);
  return r;
}

inline double hungarian_acc(std::span<const Label> pred, std::span<const Label> truth) {
  return hungarian_acc_detailed(pred, truth).acc;
}

/// Mutual information over the geometric mean of the marginal entropies
/// (natural logs). Both entropies zero gives 1; exactly one zero gives 0.
inline double nmi(std::span<const Label> pred, std::span<const Label> truth) {
  detail::require_same_length(pred, truth, "nmi");
  if (pred.empty()) throw MetricError("nmi: needs at least one sample");
  const auto t = contingency(pred, truth);
  const Eigen::MatrixXd c = t.counts.cast<double>();
  const double n = static_cast<double>(t.n);
  const Eigen::VectorXd rows = c.rowwise().sum();
  const Eigen::VectorXd cols = c.colwise().sum().transpose();
  const double hp = detail::entropy_of_counts(rows, n);
  const double ht = detail::entropy_of_counts(cols, n);
  if (hp == 0.0 && ht == 0.0) return 1.0;
  if (hp == 0.0 || ht == 0.0) return 0.0;
  double mi = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (c(i, j) > 0) mi += c(i, j) / n * std::log(n * c(i, j) / (rows(i) * cols(j)));
    }
  }
  return std::clamp(mi / std::sqrt(hp * ht), 0.0, 1.0);
}

/// Pair-counting Rand index adjusted for chance. When the index is
/// uninformative (max == expected) the result is 1 for equal partitions, else 0.
inline double ari(std::span<const Label> pred, std::span<const Label> truth) {
  detail::require_same_length(pred, truth, "ari");
  if (pred.size() < 2) throw MetricError("ari: undefined for fewer than 2 samples");
  const auto t = contingency(pred, truth);
  const Eigen::MatrixXd c = t.counts.cast<double>();
  double index = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) index += detail::choose2(c.data()[i]);
  double sum_rows = 0.0;
  double sum_cols = 0.0;
  const Eigen::VectorXd rows = c.rowwise().sum();
  const Eigen::VectorXd cols = c.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < rows.size(); ++i) sum_rows += detail::choose2(rows(i));
  for (Eigen::Index j = 0; j < cols.size(); ++j) sum_cols += detail::choose2(cols(j));
  const double total = detail::choose2(static_cast<double>(t.n));
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) {
    // Partitions are equal iff every row and column of the table has one nonzero cell.
    const bool equal = (c.array() > 0).cast<int>().rowwise().sum().maxCoeff() == 1 &&
                       (c.array() > 0).cast<int>().colwise().sum().maxCoeff() == 1;
    return equal ? 1.0 : 0.0;
  }
  return (index - expected) / (max_index - expected);
}

}  // namespace scp
