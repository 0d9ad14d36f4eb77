#pragma once

// Lloyd's k-means with k-means++ seeding and multiple restarts.

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "scp/dataset.hpp"
#include "scp/error.hpp"
#include "scp/linalg.hpp"

namespace scp {

struct KMeansOptions {
  std::size_t max_iter = 300;
  double tol = 1e-6;  // on the largest center displacement (Euclidean)
  std::size_t n_init = 10;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Eigen::MatrixXd centers;  // K x D
  std::vector<std::uint32_t> assignments;
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  bool converged = false;
  std::size_t best_restart = 0;
  std::vector<double> inertia_history;  // after each assignment step of the best restart

  bool operator==(const KMeansResult&) const = default;
};

namespace detail {

// Nearest center per row (ties to the lowest index) and the squared distance.
inline double assign_nearest(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers,
                             std::vector<std::uint32_t>& labels, Eigen::VectorXd& dist) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = centers.rows();
  labels.resize(static_cast<std::size_t>(n));
  dist.resize(n);
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index arg = 0;
    for (Eigen::Index c = 0; c < k; ++c) {
      const double d = (x.row(i) - centers.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    labels[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(arg);
    dist(i) = best;
    inertia += best;
  }
  return inertia;
}

inline Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& x, std::size_t k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(k), x.cols());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  Eigen::Index first = pick(rng);
  centers.row(0) = x.row(first);
  chosen[static_cast<std::size_t>(first)] = 1;
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index next = -1;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (d2(i) > 0.0 && acc >= target) {
          next = i;
          break;
        }
      }
      if (next < 0) {
        for (Eigen::Index i = n; i-- > 0;) {
          if (d2(i) > 0.0) {
            next = i;
            break;
          }
        }
      }
    } else {
      // All remaining points coincide with a center; take an unused row.
      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) free.push_back(i);
      }
      std::uniform_int_distribution<std::size_t> pf(0, free.size() - 1);
      next = free[pf(rng)];
    }
    centers.row(static_cast<Eigen::Index>(c)) = x.row(next);
    chosen[static_cast<std::size_t>(next)] = 1;
    d2 = d2.cwiseMin((x.rowwise() - x.row(next)).rowwise().squaredNorm());
  }
  return centers;
}

inline KMeansResult lloyd(const Eigen::MatrixXd& x, std::size_t k, const KMeansOptions& opts,
                          std::mt19937_64& rng) {
  KMeansResult r;
  r.centers = kmeanspp_seed(x, k, rng);
  Eigen::VectorXd dist;
  const auto kk = static_cast<Eigen::Index>(k);
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    r.inertia = assign_nearest(x, r.centers, r.assignments, dist);
    r.inertia_history.push_back(r.inertia);
    r.iterations_run = it + 1;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(kk, x.cols());
    std::vector<std::size_t> counts(k, 0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto c = r.assignments[static_cast<std::size_t>(i)];
      sums.row(c) += x.row(i);
      ++counts[c];
    }
    Eigen::MatrixXd next = r.centers;
    std::vector<char> taken(static_cast<std::size_t>(x.rows()), 0);
    for (Eigen::Index c = 0; c < kk; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        next.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty cluster: move its center onto the point farthest from its own center.
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        if (far < 0 || dist(i) > dist(far)) far = i;
      }
      next.row(c) = x.row(far);
      taken[static_cast<std::size_t>(far)] = 1;
      dist(far) = 0.0;
    }
    const double shift = (next - r.centers).rowwise().norm().maxCoeff();
    r.centers = std::move(next);
    if (shift < opts.tol) {
      r.converged = true;
      break;
    }
  }
  r.inertia = assign_nearest(x, r.centers, r.assignments, dist);
  r.inertia_history.push_back(r.inertia);
  return r;
}

}  // namespace detail

/// Runs on a dense N x D matrix. The best restart by inertia wins, ties to the
/// earliest restart.
inline KMeansResult kmeans(const Eigen::MatrixXd& x, std::size_t k, const KMeansOptions& opts = {}) {
  if (k == 0) throw ConfigError("kmeans: K must be >= 1");
  if (k > static_cast<std::size_t>(x.rows())) {
    throw ConfigError("kmeans: K = " + std::to_string(k) + " exceeds the number of points " +
                      std::to_string(x.rows()));
  }
  if (opts.n_init == 0) throw ConfigError("kmeans: n_init must be >= 1");
  KMeansResult best;
  for (std::size_t restart = 0; restart < opts.n_init; ++restart) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(restart)};
    std::mt19937_64 rng(seq);
    KMeansResult r = detail::lloyd(x, k, opts, rng);
    r.best_restart = restart;
    if (restart == 0 || r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

/// Clusters the clean (view 0) embeddings of a dataset.
inline KMeansResult kmeans(const EmbeddingDataset& ds, std::size_t k, const KMeansOptions& opts = {}) {
  return kmeans(Eigen::MatrixXd(ds.view_matrix(0).cast<double>()), k, opts);
}

}  // namespace scp
