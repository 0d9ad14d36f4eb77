#pragma once

// Kuhn-Munkres assignment on a dense cost matrix, O(n^3) via row/column
// potentials and shortest augmenting paths. Rectangular inputs are padded to
// square with zero cost.

#include <algorithm>
#include <limits>
#include <vector>

#include "scp/error.hpp"
#include "scp/linalg.hpp"

namespace scp {

struct Assignment {
  std::vector<Eigen::Index> row_to_col;  // -1 for rows matched only to padding
  double cost = 0.0;
};

inline Assignment solve_min_cost_assignment(const Eigen::MatrixXd& cost) {
  const Eigen::Index rows = cost.rows();
  const Eigen::Index cols = cost.cols();
  const Eigen::Index n = std::max(rows, cols);
  Assignment result;
  result.row_to_col.assign(static_cast<std::size_t>(rows), -1);
  if (n == 0) return result;

  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  c.topLeftCorner(rows, cols) = cost;

  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; index 0 is the virtual source column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<Eigen::Index> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (Eigen::Index i = 1; i <= n; ++i) {
    match[0] = i;
    Eigen::Index j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const Eigen::Index i0 = match[j0];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (Eigen::Index j = 1; j <= n; ++j) {
    const Eigen::Index i = match[j] - 1;
    if (i < rows && j - 1 < cols) {
      result.row_to_col[static_cast<std::size_t>(i)] = j - 1;
      result.cost += cost(i, j - 1);
    }
  }
  return result;
}

/// Maximum-weight one-to-one matching (weights are negated into costs).
inline Assignment solve_max_weight_assignment(const Eigen::MatrixXd& weight) {
  Assignment a = solve_min_cost_assignment(-weight);
  a.cost = -a.cost;
  return a;
}

}  // namespace scp
