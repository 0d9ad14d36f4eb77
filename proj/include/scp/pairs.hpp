#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "scp/dataset.hpp"
#include "scp/error.hpp"
#include "scp/linalg.hpp"
#include "scp/log.hpp"

namespace scp {

/// Two views of the same B items; row j of feats_a and feats_b share item_ids[j].
struct PairBatch {
  RowMatrix<float> feats_a;
  RowMatrix<float> feats_b;
  std::vector<std::size_t> item_ids;
  std::vector<std::uint32_t> view_a;
  std::vector<std::uint32_t> view_b;

  std::size_t size() const { return item_ids.size(); }
};

/// Epoch-wise positive-pair sampler. Each epoch is a fresh random permutation
/// of the items; every item gets two distinct views drawn uniformly from all
/// of its views, the clean one included. With a single view it pairs that view
/// with itself. The batch sequence depends only on (seed, batch size).
class PairSampler {
 public:
  PairSampler(const EmbeddingDataset& ds, std::size_t batch_size, std::uint64_t seed)
      : ds_(&ds), batch_size_(batch_size), rng_(seed) {
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (ds.n_views == 0) throw DataError("dataset has zero views");
    for (std::uint32_t v = 0; v < ds.n_views; ++v) pool_.push_back(v);
    if (pool_.size() == 1) {
      warn("dataset has a single view; positive pairs are degenerate (view paired with itself)");
    }
    order_.resize(ds.n_items);
    start_epoch();
  }

  std::size_t batch_size() const { return batch_size_; }
  std::size_t batches_per_epoch() const {
    return (ds_->n_items + batch_size_ - 1) / batch_size_;
  }
  const std::vector<std::uint32_t>& view_pool() const { return pool_; }

  void start_epoch() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }

  /// Next batch of the current epoch, or nullopt once every item was visited.
  std::optional<PairBatch> next() {
    if (cursor_ >= order_.size()) return std::nullopt;
    const std::size_t b = std::min(batch_size_, order_.size() - cursor_);
    const auto d = static_cast<Eigen::Index>(ds_->dim);
    PairBatch batch;
    batch.feats_a.resize(static_cast<Eigen::Index>(b), d);
    batch.feats_b.resize(static_cast<Eigen::Index>(b), d);
    batch.item_ids.resize(b);
    batch.view_a.resize(b);
    batch.view_b.resize(b);
    for (std::size_t j = 0; j < b; ++j) {
      const std::size_t item = order_[cursor_ + j];
      const auto [va, vb] = draw_views();
      batch.item_ids[j] = item;
      batch.view_a[j] = va;
      batch.view_b[j] = vb;
      auto xa = ds_->view(item, va);
      auto xb = ds_->view(item, vb);
      std::copy(xa.begin(), xa.end(), batch.feats_a.row(static_cast<Eigen::Index>(j)).data());
      std::copy(xb.begin(), xb.end(), batch.feats_b.row(static_cast<Eigen::Index>(j)).data());
    }
    cursor_ += b;
    return batch;
  }

 private:
  std::pair<std::uint32_t, std::uint32_t> draw_views() {
    const std::size_t n = pool_.size();
    if (n == 1) return {pool_[0], pool_[0]};
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::uniform_int_distribution<std::size_t> second(0, n - 2);
    const std::size_t a = first(rng_);
    std::size_t b = second(rng_);
    if (b >= a) ++b;
    return {pool_[a], pool_[b]};
  }

  const EmbeddingDataset* ds_;
  std::size_t batch_size_;
  std::mt19937_64 rng_;
  std::vector<std::uint32_t> pool_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace scp
