#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>

#include "scp/error.hpp"
#include "scp/head.hpp"
#include "scp/log.hpp"

namespace scp {

/// Cosine annealing from lr_init at step 0 to lr_min at total_steps.
class CosineSchedule {
 public:
  CosineSchedule(double lr_init, std::uint64_t total_steps, double lr_min = 0.0)
      : lr_init_(lr_init), lr_min_(lr_min), total_steps_(total_steps) {
    if (!(lr_init >= 0.0) || !(lr_min >= 0.0)) throw ConfigError("learning rates must be >= 0");
  }

  double lr_init() const { return lr_init_; }
  double lr_min() const { return lr_min_; }
  std::uint64_t total_steps() const { return total_steps_; }

  // Steps past the end clamp to lr_min with a single warning per schedule.
  double lr_at(std::uint64_t step) const {
    if (total_steps_ == 0) return lr_init_;
    if (step > total_steps_) {
      if (!warned_) {
        warned_ = true;
        warn("lr schedule queried at step " + std::to_string(step) + " beyond total " +
             std::to_string(total_steps_) + "; clamping to lr_min");
      }
      return lr_min_;
    }
    const double frac = static_cast<double>(step) / static_cast<double>(total_steps_);
    return lr_min_ + 0.5 * (lr_init_ - lr_min_) * (1.0 + std::cos(std::numbers::pi * frac));
  }

 private:
  double lr_init_;
  double lr_min_;
  std::uint64_t total_steps_;
  mutable bool warned_ = false;
};

inline double lr_at(const CosineSchedule& schedule, std::uint64_t step) {
  return schedule.lr_at(step);
}

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamHyper&) const = default;
};

template <class T>
struct AdamState {
  ParamSet<T> m;
  ParamSet<T> v;
  std::uint64_t step_count = 0;
  AdamHyper hyper;

  static AdamState for_dims(const LayerDims& dims, AdamHyper hyper = {}) {
    return AdamState{ParamSet<T>::zeros(dims), ParamSet<T>::zeros(dims), 0, hyper};
  }

  bool operator==(const AdamState&) const = default;
};

namespace detail {

// One bias-corrected Adam update of a flat block; `step` is the 1-based count.
template <class T>
void adam_block(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v,
                std::uint64_t step, double lr, const AdamHyper& h) {
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(step));
  const T b1 = static_cast<T>(h.beta1);
  const T b2 = static_cast<T>(h.beta2);
  const T step_size = static_cast<T>(lr / bc1);
  const T sqrt_bc2 = static_cast<T>(std::sqrt(bc2));
  const T eps = static_cast<T>(h.eps);
  for (std::size_t j = 0; j < params.size(); ++j) {
    const T g = grads[j];
    m[j] = b1 * m[j] + (T(1) - b1) * g;
    v[j] = b2 * v[j] + (T(1) - b2) * g * g;
    params[j] -= step_size * m[j] / (std::sqrt(v[j]) / sqrt_bc2 + eps);
  }
}

template <class T>
bool all_finite(std::span<const T> values) {
  for (T x : values) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace detail

/// Single flat parameter vector form, mainly for standalone use.
template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v,
               std::uint64_t& step_count, double lr, const AdamHyper& hyper = {}) {
  if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
  }
  if (!(lr >= 0.0)) throw ConfigError("adam_step: learning rate must be >= 0");
  if (!detail::all_finite(grads)) throw NumericError("adam_step: non-finite gradient");
  ++step_count;
  detail::adam_block(params, grads, m, v, step_count, lr, hyper);
}

template <class T>
void adam_step(ParamSet<T>& params, const ParamSet<T>& grads, AdamState<T>& state, double lr) {
  if (!params.same_shape(grads) || !params.same_shape(state.m) || !params.same_shape(state.v)) {
    throw ShapeError("adam_step: parameter, gradient and moment shapes differ");
  }
  if (!(lr >= 0.0)) throw ConfigError("adam_step: learning rate must be >= 0");
  if (!grads.all_finite()) throw NumericError("adam_step: non-finite gradient");
  ++state.step_count;
  for (std::size_t b = 0; b < ParamSet<T>::kNumBlocks; ++b) {
    detail::adam_block(params.block(b), grads.block(b), state.m.block(b), state.v.block(b),
                       state.step_count, lr, state.hyper);
  }
}

template <class T>
void adam_step(ClusterHead<T>& head, const ParamSet<T>& grads, AdamState<T>& state, double lr) {
  adam_step(head.mutable_params(), grads, state, lr);
}

/// Rescales grads so their global L2 norm is at most max_norm. Returns the norm
/// before clipping.
template <class T>
double clip_grad_norm(ParamSet<T>& grads, double max_norm) {
  const double norm = std::sqrt(static_cast<double>(grads.squared_norm()));
  if (max_norm > 0.0 && norm > max_norm) grads *= static_cast<T>(max_norm / norm);
  return norm;
}

}  // namespace scp
