#pragma once

// Gaussian blob surrogate for backbone features, used for desk-scale tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "scp/dataset.hpp"
#include "scp/error.hpp"

namespace scp {

struct BlobParams {
  std::size_t n_clusters = 5;
  std::size_t per_cluster = 400;
  std::size_t dim = 32;
  double center_sep = 10.0;
  double view_noise = 0.5;
  std::size_t n_views = 3;  // view 0 clean, the rest augmented
  std::uint64_t seed = 0;
};

/// Centers are scaled basis vectors (pairwise distance exactly center_sep)
/// when n_clusters <= dim; otherwise random Gaussian directions rescaled until
/// the closest pair is center_sep apart. Items are cluster-major.
inline EmbeddingDataset make_blobs(const BlobParams& p) {
  if (!(p.center_sep > 0.0)) throw ConfigError("center_sep must be > 0");
  if (!(p.view_noise >= 0.0)) throw ConfigError("view_noise must be >= 0");
  if (p.n_clusters == 0 || p.per_cluster == 0 || p.dim == 0 || p.n_views == 0) {
    throw ConfigError("blob counts, dim and n_views must be >= 1");
  }

  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::vector<double>> centers(p.n_clusters, std::vector<double>(p.dim, 0.0));
  if (p.n_clusters <= p.dim) {
    const double scale = p.center_sep / std::sqrt(2.0);
    for (std::size_t c = 0; c < p.n_clusters; ++c) centers[c][c] = scale;
  } else {
    for (auto& c : centers) {
      for (auto& x : c) x = normal(rng);
    }
    double min_dist = INFINITY;
    for (std::size_t a = 0; a < p.n_clusters; ++a) {
      for (std::size_t b = a + 1; b < p.n_clusters; ++b) {
        double sq = 0.0;
        for (std::size_t d = 0; d < p.dim; ++d) sq += std::pow(centers[a][d] - centers[b][d], 2);
        min_dist = std::min(min_dist, std::sqrt(sq));
      }
    }
    if (!(min_dist > 0.0)) throw ConfigError("degenerate random centers; change the seed");
    const double scale = p.center_sep / min_dist;
    for (auto& c : centers) {
      for (auto& x : c) x *= scale;
    }
  }

  EmbeddingDataset ds;
  ds.n_items = p.n_clusters * p.per_cluster;
  ds.n_views = p.n_views;
  ds.dim = p.dim;
  ds.view0_is_clean = true;
  ds.n_classes = static_cast<std::uint32_t>(p.n_clusters);
  ds.features.resize(ds.n_items * ds.n_views * ds.dim);
  std::vector<std::uint32_t> labels(ds.n_items);
  std::vector<double> clean(p.dim);

  for (std::size_t item = 0; item < ds.n_items; ++item) {
    const std::size_t c = item / p.per_cluster;
    labels[item] = static_cast<std::uint32_t>(c);
    for (std::size_t d = 0; d < p.dim; ++d) clean[d] = centers[c][d] + normal(rng);
    for (std::size_t v = 0; v < p.n_views; ++v) {
      auto out = ds.view(item, v);
      for (std::size_t d = 0; d < p.dim; ++d) {
        const double noise = (v == 0 || p.view_noise == 0.0) ? 0.0 : p.view_noise * normal(rng);
        out[d] = static_cast<float>(clean[d] + noise);
      }
    }
  }
  ds.labels = std::move(labels);
  return ds;
}

}  // namespace scp
