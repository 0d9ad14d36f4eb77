#pragma once

// Training loop: sample positive pairs, run both views through the head,
// minimize l_clu with Adam under a per-step cosine schedule, evaluate on the
// clean view.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if defined(__SSE__) || defined(_M_X64)
#include <xmmintrin.h>
#define SCP_HAVE_MXCSR 1
#endif

#include <json.hpp>

#include "scp/dataset.hpp"
#include "scp/error.hpp"
#include "scp/head.hpp"
#include "scp/log.hpp"
#include "scp/logits.hpp"
#include "scp/losses.hpp"
#include "scp/optim.hpp"
#include "scp/pairs.hpp"
#include "scp/report.hpp"

namespace scp {

struct TrainConfig {
  std::size_t k = 10;
  double alpha = 1.0;
  std::size_t epochs = 30;
  std::size_t batch_size = 512;
  double lr_init = 1e-3;
  double lr_min = 0.0;
  std::uint64_t seed = 0;
  Activation activation = Activation::tanh;
  bool symmetrize_le = false;
  Reduction le_reduction = Reduction::mean;
  bool l2_normalize = false;
  std::size_t log_every = 1;          // trace every n-th step (the last step is always kept)
  std::size_t eval_every_epochs = 0;  // 0: evaluate only at the end
  HiddenDims hidden = kDefaultHidden;
  double clip_norm = 0.0;  // 0 disables gradient clipping

  bool operator==(const TrainConfig&) const = default;
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.k < 2) throw ConfigError("k must be >= 2, got " + std::to_string(cfg.k));
  if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) {
    throw ConfigError("alpha must be a finite value >= 0");
  }
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.lr_init >= 0.0) || !(cfg.lr_min >= 0.0)) throw ConfigError("learning rates must be >= 0");
  if (cfg.log_every == 0) throw ConfigError("log_every must be >= 1");
  if (!(cfg.clip_norm >= 0.0)) throw ConfigError("clip_norm must be >= 0");
  for (auto h : cfg.hidden) {
    if (h == 0) throw ConfigError("hidden widths must be >= 1");
  }
}

/// Stable text rendering of every field; its hash identifies a run's config.
inline std::string canonical_string(const TrainConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "k=" << c.k << ";alpha=" << c.alpha << ";epochs=" << c.epochs
     << ";batch_size=" << c.batch_size << ";lr_init=" << c.lr_init << ";lr_min=" << c.lr_min
     << ";seed=" << c.seed << ";activation=" << to_string(c.activation)
     << ";symmetrize_le=" << c.symmetrize_le << ";le_reduction=" << to_string(c.le_reduction)
     << ";l2_normalize=" << c.l2_normalize
     << ";hidden=" << c.hidden[0] << ',' << c.hidden[1] << ',' << c.hidden[2] << ',' << c.hidden[3]
     << ";clip_norm=" << c.clip_norm;
  return os.str();
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t config_hash(const TrainConfig& cfg) { return fnv1a64(canonical_string(cfg)); }

struct StepRecord {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double l_e = 0.0;
  double l_con = 0.0;
  double entropy = 0.0;
  double l_clu = 0.0;

  bool operator==(const StepRecord&) const = default;
};

struct EpochEval {
  std::size_t epoch = 0;  // number of completed epochs
  ClusteringReport report;

  bool operator==(const EpochEval&) const = default;
};

struct TrainTrace {
  std::vector<StepRecord> steps;
  std::vector<EpochEval> evals;

  bool operator==(const TrainTrace&) const = default;
};

inline nlohmann::json to_json(const StepRecord& s) {
  return {{"step", s.step},   {"epoch", s.epoch}, {"lr", s.lr},          {"l_e", s.l_e},
          {"l_con", s.l_con}, {"entropy", s.entropy}, {"l_clu", s.l_clu}};
}

/// One JSON record per line: step records, then epoch evaluations.
inline std::string trace_lines(const TrainTrace& trace) {
  std::string out;
  for (const auto& s : trace.steps) {
    auto j = to_json(s);
    j["type"] = "step";
    out += j.dump() + '\n';
  }
  for (const auto& e : trace.evals) {
    nlohmann::json j{{"type", "eval"}, {"epoch", e.epoch}, {"report", to_json(e.report)}};
    out += j.dump() + '\n';
  }
  return out;
}

template <class T>
struct TrainResult {
  ClusterHead<T> head;
  AdamState<T> adam;
  TrainTrace trace;
  ClusteringReport report;
};

/// Not-normalized datasets are copied and normalized when `l2` is set.
inline const EmbeddingDataset& prepared_features(const EmbeddingDataset& ds, bool l2,
                                                 std::optional<EmbeddingDataset>& storage) {
  if (!l2 || ds.l2_normalized) return ds;
  storage = ds;
  l2_normalize(*storage);
  return *storage;
}

/// Pre-softmax outputs on the clean view (view 0), computed in chunks.
template <class T>
RowMatrix<T> compute_logits(const ClusterHead<T>& head, const EmbeddingDataset& ds,
                            std::size_t chunk = 4096) {
  if (ds.dim != head.input_dim()) {
    throw ShapeError("dataset dim " + std::to_string(ds.dim) + " does not match head input dim " +
                     std::to_string(head.input_dim()));
  }
  const RowMatrix<float> x = ds.view_matrix(0);
  RowMatrix<T> logits(x.rows(), static_cast<Eigen::Index>(head.num_clusters()));
  for (Eigen::Index start = 0; start < x.rows(); start += static_cast<Eigen::Index>(chunk)) {
    const Eigen::Index rows = std::min<Eigen::Index>(static_cast<Eigen::Index>(chunk), x.rows() - start);
    logits.middleRows(start, rows) = predict(head, x.middleRows(start, rows)).logits;
  }
  return logits;
}

template <class T>
ClusteringReport evaluate(const ClusterHead<T>& head, const EmbeddingDataset& ds) {
  const RowMatrix<T> logits = compute_logits(head, ds);
  const Matrix<T> probs = detail::row_softmax(Matrix<T>(logits));
  return cluster_report(probs, ds.labels);
}

template <class T>
void export_logits(const ClusterHead<T>& head, const EmbeddingDataset& ds,
                   const std::filesystem::path& path) {
  const RowMatrix<float> logits = compute_logits(head, ds).template cast<float>();
  try {
    save_logits(logits, path);
  } catch (const IoError& e) {
    throw IoError(std::string(e.what()) + " (exporting logits to '" + path.string() + "')");
  }
}

namespace detail {

// Flushes float subnormals to zero while alive. Sharpened softmax outputs push
// gradients and Adam moments into the subnormal range, where x86 arithmetic is
// roughly two orders of magnitude slower.
class FlushDenormalsScope {
 public:
  FlushDenormalsScope() {
#ifdef SCP_HAVE_MXCSR
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040u);  // FTZ | DAZ
#endif
  }
  ~FlushDenormalsScope() {
#ifdef SCP_HAVE_MXCSR
    _mm_setcsr(saved_);
#endif
  }
  FlushDenormalsScope(const FlushDenormalsScope&) = delete;
  FlushDenormalsScope& operator=(const FlushDenormalsScope&) = delete;

 private:
  unsigned saved_ = 0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

template <class T = float>
TrainResult<T> train(const EmbeddingDataset& input, const TrainConfig& cfg) {
  validate(cfg);
  const detail::FlushDenormalsScope flush_denormals;
  if (cfg.batch_size == 1) warn("batch_size = 1 makes the pairwise losses degenerate");
  std::optional<EmbeddingDataset> storage;
  const EmbeddingDataset& ds = prepared_features(input, cfg.l2_normalize, storage);
  if (ds.n_items == 0) throw DataError("cannot train on an empty dataset");

  TrainResult<T> result{init_head<T>(ds.dim, cfg.k, cfg.activation, cfg.seed, cfg.hidden),
                        AdamState<T>{}, {}, {}};
  auto& head = result.head;
  result.adam = AdamState<T>::for_dims(head.dims());

  PairSampler sampler(ds, cfg.batch_size, detail::splitmix64(cfg.seed));
  const std::uint64_t total_steps = cfg.epochs * sampler.batches_per_epoch();
  const CosineSchedule schedule(cfg.lr_init, total_steps, cfg.lr_min);
  const LossOptions loss_opts{cfg.alpha, cfg.symmetrize_le, cfg.le_reduction};

  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch > 0) sampler.start_epoch();
    while (auto batch = sampler.next()) {
      const auto fa = forward(head, batch->feats_a);
      const auto fb = forward(head, batch->feats_b);
      const CombinedLoss loss =
          loss_clu(fa.out.probs.template cast<double>(), fb.out.probs.template cast<double>(), loss_opts);
      const auto& lb = loss.breakdown;
      if (!std::isfinite(lb.l_clu)) {
        std::ostringstream os;
        os << "non-finite loss at step " << step << " (epoch " << epoch << "): l_e=" << lb.l_e
           << " l_con=" << lb.l_con << " entropy=" << lb.entropy << " l_clu=" << lb.l_clu;
        throw NumericError(os.str());
      }
      ParamSet<T> grads = backward(head, fa.cache, Matrix<T>(loss.grad_a.template cast<T>()));
      grads += backward(head, fb.cache, Matrix<T>(loss.grad_b.template cast<T>()));
      if (cfg.clip_norm > 0.0) clip_grad_norm(grads, cfg.clip_norm);

      const double lr = schedule.lr_at(step);
      try {
        adam_step(head, grads, result.adam, lr);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at step " + std::to_string(step));
      }
      if (step % cfg.log_every == 0 || step + 1 == total_steps) {
        result.trace.steps.push_back({step, epoch, lr, lb.l_e, lb.l_con, lb.entropy, lb.l_clu});
      }
      ++step;
    }
    if (cfg.eval_every_epochs > 0 && (epoch + 1) % cfg.eval_every_epochs == 0) {
      result.trace.evals.push_back({epoch + 1, evaluate(head, ds)});
    }
  }
  result.report = evaluate(head, ds);
  return result;
}

}  // namespace scp
