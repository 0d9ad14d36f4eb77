#pragma once

// The trainable cluster head: a five-layer fully connected network with a
// softmax over the cluster dimension, plus its analytic backward pass.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>

#include "scp/error.hpp"
#include "scp/linalg.hpp"

namespace scp {

enum class Activation : std::uint8_t { relu = 0, gelu = 1, tanh = 2 };

inline std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::relu: return "relu";
    case Activation::gelu: return "gelu";
    case Activation::tanh: return "tanh";
  }
  return "unknown";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "gelu") return Activation::gelu;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected relu, gelu or tanh)");
}

inline Activation activation_from_tag(std::uint8_t tag) {
  if (tag > static_cast<std::uint8_t>(Activation::tanh)) {
    throw ConfigError("unknown activation tag " + std::to_string(tag));
  }
  return static_cast<Activation>(tag);
}

inline constexpr std::size_t kNumLayers = 5;
using LayerDims = std::array<std::size_t, kNumLayers + 1>;
using HiddenDims = std::array<std::size_t, kNumLayers - 1>;

// 786 is the width as published; it is not a typo for 768 here.
inline constexpr HiddenDims kDefaultHidden{1024, 786, 512, 1024};

inline LayerDims make_layer_dims(std::size_t input_dim, std::size_t clusters,
                                 const HiddenDims& hidden = kDefaultHidden) {
  return {input_dim, hidden[0], hidden[1], hidden[2], hidden[3], clusters};
}

inline std::size_t parameter_count(const LayerDims& dims) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < kNumLayers; ++i) n += (dims[i] + 1) * dims[i + 1];
  return n;
}

/// Weights and biases of all five layers. Also used for gradients and for
/// optimizer moments, which share the parameter layout exactly.
template <class T>
struct ParamSet {
  static constexpr std::size_t kNumBlocks = 2 * kNumLayers;

  std::array<RowMatrix<T>, kNumLayers> weights;  // (out, in)
  std::array<Vector<T>, kNumLayers> biases;

  static ParamSet zeros(const LayerDims& dims) {
    ParamSet p;
    for (std::size_t i = 0; i < kNumLayers; ++i) {
      const auto out = static_cast<Eigen::Index>(dims[i + 1]);
      const auto in = static_cast<Eigen::Index>(dims[i]);
      p.weights[i] = RowMatrix<T>::Zero(out, in);
      p.biases[i] = Vector<T>::Zero(out);
    }
    return p;
  }

  /// Block b is weight (b/2) for even b and bias (b/2) for odd b; this is
  /// also the on-disk order.
  std::span<T> block(std::size_t b) {
    if (b % 2 == 0) {
      auto& m = weights[b / 2];
      return {m.data(), static_cast<std::size_t>(m.size())};
    }
    auto& v = biases[b / 2];
    return {v.data(), static_cast<std::size_t>(v.size())};
  }

  std::span<const T> block(std::size_t b) const {
    if (b % 2 == 0) {
      const auto& m = weights[b / 2];
      return {m.data(), static_cast<std::size_t>(m.size())};
    }
    const auto& v = biases[b / 2];
    return {v.data(), static_cast<std::size_t>(v.size())};
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (std::size_t b = 0; b < kNumBlocks; ++b) n += block(b).size();
    return n;
  }

  bool all_finite() const {
    for (std::size_t i = 0; i < kNumLayers; ++i) {
      if (!weights[i].allFinite() || !biases[i].allFinite()) return false;
    }
    return true;
  }

  bool same_shape(const ParamSet& other) const {
    for (std::size_t i = 0; i < kNumLayers; ++i) {
      if (weights[i].rows() != other.weights[i].rows() ||
          weights[i].cols() != other.weights[i].cols() ||
          biases[i].size() != other.biases[i].size()) {
        return false;
      }
    }
    return true;
  }

  ParamSet& operator+=(const ParamSet& other) {
    for (std::size_t i = 0; i < kNumLayers; ++i) {
      weights[i] += other.weights[i];
      biases[i] += other.biases[i];
    }
    return *this;
  }

  ParamSet& operator*=(T s) {
    for (std::size_t i = 0; i < kNumLayers; ++i) {
      weights[i] *= s;
      biases[i] *= s;
    }
    return *this;
  }

  T squared_norm() const {
    T acc = 0;
    for (std::size_t i = 0; i < kNumLayers; ++i) {
      acc += weights[i].squaredNorm() + biases[i].squaredNorm();
    }
    return acc;
  }

  template <class U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (std::size_t i = 0; i < kNumLayers; ++i) {
      out.weights[i] = weights[i].template cast<U>();
      out.biases[i] = biases[i].template cast<U>();
    }
    return out;
  }

  bool operator==(const ParamSet& other) const {
    if (!same_shape(other)) return false;
    for (std::size_t i = 0; i < kNumLayers; ++i) {
      if (weights[i] != other.weights[i] || biases[i] != other.biases[i]) return false;
    }
    return true;
  }
};

namespace detail {
inline std::uint64_t next_head_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}
}  // namespace detail

template <class T>
class ClusterHead {
 public:
  ClusterHead(LayerDims dims, Activation activation, std::uint64_t seed, ParamSet<T> params)
      : dims_(dims), activation_(activation), seed_(seed), params_(std::move(params)),
        id_(detail::next_head_id()) {
    const auto expected = ParamSet<T>::zeros(dims_);
    if (!params_.same_shape(expected)) throw ShapeError("parameter shapes do not match layer dims");
  }

  const LayerDims& dims() const { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t num_clusters() const { return dims_.back(); }
  Activation activation() const { return activation_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t parameter_count() const { return scp::parameter_count(dims_); }

  const ParamSet<T>& params() const { return params_; }

  // Any mutable access invalidates outstanding forward caches.
  ParamSet<T>& mutable_params() {
    ++generation_;
    return params_;
  }

  std::uint64_t id() const { return id_; }
  std::uint64_t generation() const { return generation_; }

  template <class U>
  ClusterHead<U> cast() const {
    return ClusterHead<U>(dims_, activation_, seed_, params_.template cast<U>());
  }

 private:
  LayerDims dims_;
  Activation activation_;
  std::uint64_t seed_;
  ParamSet<T> params_;
  std::uint64_t id_;
  std::uint64_t generation_ = 0;
};

/// Fan-in scaled uniform weights (bound sqrt(6 / fan_in)) and zero biases.
/// Values are drawn in double precision so heads of different scalar types
/// built from one seed agree up to rounding.
template <class T = float>
ClusterHead<T> init_head(std::size_t input_dim, std::size_t clusters, Activation activation,
                         std::uint64_t seed, const HiddenDims& hidden = kDefaultHidden) {
  if (input_dim == 0) throw ConfigError("invalid dimension: input dim must be >= 1");
  if (clusters < 2) {
    throw ConfigError("invalid cluster count: K must be >= 2, got " + std::to_string(clusters));
  }
  for (auto h : hidden) {
    if (h == 0) throw ConfigError("invalid dimension: hidden widths must be >= 1");
  }
  const LayerDims dims = make_layer_dims(input_dim, clusters, hidden);
  auto params = ParamSet<T>::zeros(dims);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    const double bound = std::sqrt(6.0 / static_cast<double>(dims[i]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto& w = params.weights[i];
    for (Eigen::Index j = 0; j < w.size(); ++j) w.data()[j] = static_cast<T>(dist(rng));
  }
  return ClusterHead<T>(dims, activation, seed, std::move(params));
}

template <class T>
struct AssignmentBatch {
  Matrix<T> logits;  // B x K, pre-softmax
  Matrix<T> probs;   // B x K, row-wise softmax of logits

  Eigen::Index rows() const { return probs.rows(); }
  Eigen::Index cols() const { return probs.cols(); }
};

template <class T>
struct ForwardCache {
  std::uint64_t head_id = 0;
  std::uint64_t generation = 0;
  std::array<Matrix<T>, kNumLayers> inputs;  // input of layer i; inputs[0] is the batch
  std::array<Matrix<T>, kNumLayers - 1> pre;  // hidden pre-activations
  Matrix<T> probs;
};

template <class T>
struct ForwardResult {
  AssignmentBatch<T> out;
  ForwardCache<T> cache;
};

namespace detail {

template <class T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(std::numbers::sqrt2 / 2)));
}

template <class T>
T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(std::numbers::sqrt2 / 2)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
  return cdf + x * pdf;
}

template <class T>
Matrix<T> activate(const Matrix<T>& z, Activation act) {
  switch (act) {
    case Activation::relu: return z.cwiseMax(T(0));
    case Activation::gelu: return z.unaryExpr([](T x) { return gelu(x); });
    case Activation::tanh: return z.array().tanh().matrix();
  }
  throw ConfigError("unknown activation");
}

// d(act)/dz at z, and for tanh expressed through the activation output a.
template <class T>
Matrix<T> activation_grad(const Matrix<T>& z, const Matrix<T>& a, Activation act) {
  switch (act) {
    case Activation::relu: return (z.array() > T(0)).template cast<T>().matrix();
    case Activation::gelu: return z.unaryExpr([](T x) { return gelu_grad(x); });
    case Activation::tanh: return (T(1) - a.array().square()).matrix();
  }
  throw ConfigError("unknown activation");
}

template <class T>
Matrix<T> row_softmax(const Matrix<T>& logits) {
  Matrix<T> p = (logits.colwise() - logits.rowwise().maxCoeff()).array().exp().matrix();
  const Vector<T> sums = p.rowwise().sum();
  p.array().colwise() /= sums.array();
  return p;
}

template <class T, class Derived>
AssignmentBatch<T> run_forward(const ClusterHead<T>& head, const Eigen::MatrixBase<Derived>& x,
                               ForwardCache<T>* cache) {
  if (static_cast<std::size_t>(x.cols()) != head.input_dim()) {
    throw ShapeError("feature width " + std::to_string(x.cols()) + " does not match head input dim " +
                     std::to_string(head.input_dim()));
  }
  if (!x.allFinite()) throw InputError("non-finite value in head input");

  const auto& p = head.params();
  Matrix<T> a = x.template cast<T>();
  for (std::size_t i = 0; i + 1 < kNumLayers; ++i) {
    Matrix<T> z = a * p.weights[i].transpose();
    z.rowwise() += p.biases[i].transpose();
    Matrix<T> next = activate(z, head.activation());
    if (cache) {
      cache->inputs[i] = std::move(a);
      cache->pre[i] = std::move(z);
    }
    a = std::move(next);
  }
  AssignmentBatch<T> out;
  out.logits = a * p.weights.back().transpose();
  out.logits.rowwise() += p.biases.back().transpose();
  out.probs = row_softmax(out.logits);
  if (cache) {
    cache->inputs.back() = std::move(a);
    cache->probs = out.probs;
    cache->head_id = head.id();
    cache->generation = head.generation();
  }
  return out;
}

}  // namespace detail

/// Forward pass keeping every intermediate needed by backward().
template <class T, class Derived>
ForwardResult<T> forward(const ClusterHead<T>& head, const Eigen::MatrixBase<Derived>& features) {
  ForwardResult<T> r;
  r.out = detail::run_forward(head, features, &r.cache);
  return r;
}

/// Forward pass without a cache, for evaluation.
template <class T, class Derived>
AssignmentBatch<T> predict(const ClusterHead<T>& head, const Eigen::MatrixBase<Derived>& features) {
  return detail::run_forward<T>(head, features, nullptr);
}

/// Parameter gradients of a scalar loss given dLoss/dprobs. The softmax
/// Jacobian is applied here, so callers differentiate with respect to probs.
template <class T>
ParamSet<T> backward(const ClusterHead<T>& head, const ForwardCache<T>& cache,
                     const Matrix<T>& grad_probs) {
  if (cache.head_id != head.id() || cache.generation != head.generation()) {
    throw CacheError("forward cache does not belong to the current head parameters");
  }
  if (grad_probs.rows() != cache.probs.rows() || grad_probs.cols() != cache.probs.cols()) {
    throw ShapeError("gradient shape does not match cached forward batch");
  }
  const auto& p = head.params();
  auto grads = ParamSet<T>::zeros(head.dims());

  // dL/dz = P * (G - <G, P>_row)
  const Vector<T> inner = grad_probs.cwiseProduct(cache.probs).rowwise().sum();
  Matrix<T> dz = cache.probs.cwiseProduct(grad_probs - inner.replicate(1, grad_probs.cols()));

  for (std::size_t layer = kNumLayers; layer-- > 0;) {
    const auto& in = cache.inputs[layer];
    grads.weights[layer].noalias() = dz.transpose() * in;
    grads.biases[layer] = dz.colwise().sum().transpose();
    if (layer == 0) break;
    Matrix<T> da = dz * p.weights[layer];
    dz = da.cwiseProduct(detail::activation_grad(cache.pre[layer - 1], in, head.activation()));
  }
  return grads;
}

}  // namespace scp
