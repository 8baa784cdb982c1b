// Two-point Gaussian zeroth-order gradient estimates for one parameter block.
//
//   g = [(f(x + mu v, y; i) - f(x, y; i)) / mu] v,   v ~ N(0, I_{d_x})
//
// Only the selected block is perturbed; the other block is read as-is. The
// estimate is unbiased for the gradient of the Gaussian-smoothed objective
// f_mu(x) = E_v f(x + mu v).
#ifndef HZO_ESTIMATOR_HPP
#define HZO_ESTIMATOR_HPP

#include "hzo/objectives.hpp"
#include "hzo/rng.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace hzo {

template <typename Scalar>
struct ZoConfig {
  Scalar mu = Scalar(1e-3);
  Index directions = 1;

  void validate() const {
    if (!(mu > 0) || !std::isfinite(mu)) {
      throw ConfigError("ZoConfig: mu must be positive and finite");
    }
    if (directions < 1) {
      throw ConfigError("ZoConfig: directions must be >= 1");
    }
  }
};

/// Set when mu * ||v|| falls below 1e3 * eps * ||x||: the finite difference
/// is then dominated by rounding.
struct EstimateDiagnostics {
  Index cancellation_warnings = 0;
};

namespace detail {

template <typename Scalar>
void require_perturbable(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w,
                         Scalar mu, Block block) {
  require_layout(obj, w);
  if (block == Block::Full) {
    throw ConfigError("zeroth-order estimates act on the x or y block, not the full vector");
  }
  if (!(mu > 0) || !std::isfinite(mu)) {
    throw ConfigError("two_point_estimate: mu must be positive and finite");
  }
}

template <typename Scalar>
Scalar checked_value(const FiniteSumObjective<Scalar>& obj, const VectorX<Scalar>& w, Index i,
                     const char* where) {
  const Scalar f = obj.value(w, i);
  if (!std::isfinite(f)) {
    throw NumericError(std::string("two_point_estimate: non-finite objective value at ") + where +
                       " point (sample " + std::to_string(i) + ")");
  }
  return f;
}

/// Difference quotient along v from a precomputed base value.
template <typename Scalar>
VectorX<Scalar> forward_difference(const FiniteSumObjective<Scalar>& obj,
                                   const HybridPoint<Scalar>& w, Index i, Scalar base_value,
                                   Scalar mu, const VectorX<Scalar>& v, Block block,
                                   EstimateDiagnostics* diag) {
  const BlockLayout& layout = w.layout();
  if (v.size() != layout.size(block)) {
    throw DimensionError("two_point_estimate: direction has dimension " + std::to_string(v.size()) +
                         ", block '" + to_string(block) + "' has " +
                         std::to_string(layout.size(block)));
  }
  if (diag != nullptr) {
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    if (mu * v.norm() < Scalar(1e3) * eps * w.block(block).norm()) {
      ++diag->cancellation_warnings;
    }
  }
  VectorX<Scalar> shifted = w.values();
  block_segment(shifted, layout, block) += mu * v;
  const Scalar perturbed = checked_value(obj, shifted, i, "perturbed");
  return ((perturbed - base_value) / mu) * v;
}

}  // namespace detail

/// Single-direction estimate of the gradient of f(.; i) with respect to `block`.
template <typename Scalar>
VectorX<Scalar> two_point_estimate(const FiniteSumObjective<Scalar>& obj,
                                   const HybridPoint<Scalar>& w, Index i, Scalar mu,
                                   const VectorX<Scalar>& v, Block block = Block::X,
                                   EstimateDiagnostics* diag = nullptr) {
  detail::require_perturbable(obj, w, mu, block);
  const Scalar base = detail::checked_value(obj, w.values(), i, "base");
  return detail::forward_difference(obj, w, i, base, mu, v, block, diag);
}

/// Average of cfg.directions single-direction estimates, directions drawn in
/// order from rng.
template <typename Scalar>
VectorX<Scalar> estimate_block_gradient(const FiniteSumObjective<Scalar>& obj,
                                        const HybridPoint<Scalar>& w, Index i,
                                        const ZoConfig<Scalar>& cfg, RngStream& rng, Block block,
                                        EstimateDiagnostics* diag = nullptr) {
  cfg.validate();
  detail::require_perturbable(obj, w, cfg.mu, block);
  const Scalar base = detail::checked_value(obj, w.values(), i, "base");
  const Index dim = w.layout().size(block);
  VectorX<Scalar> sum = VectorX<Scalar>::Zero(dim);
  for (Index k = 0; k < cfg.directions; ++k) {
    const VectorX<Scalar> v = sample_gaussian<Scalar>(rng, dim);
    sum += detail::forward_difference(obj, w, i, base, cfg.mu, v, block, diag);
  }
  return sum / static_cast<Scalar>(cfg.directions);
}

template <typename Scalar>
VectorX<Scalar> estimate_x_gradient(const FiniteSumObjective<Scalar>& obj,
                                    const HybridPoint<Scalar>& w, Index i,
                                    const ZoConfig<Scalar>& cfg, RngStream& rng,
                                    EstimateDiagnostics* diag = nullptr) {
  return estimate_block_gradient(obj, w, i, cfg, rng, Block::X, diag);
}

template <typename Scalar>
struct SmoothedGradient {
  VectorX<Scalar> mean;
  VectorX<Scalar> standard_error;
  Index samples = 0;
};

/// Monte Carlo reference for grad f_mu on the x-block, using the antithetic
/// form E[(f(x + mu v) - f(x - mu v)) / (2 mu) v], which shares its mean with
/// the forward estimator but not its sampling path. Test oracle only.
template <typename Scalar>
SmoothedGradient<Scalar> smoothed_gradient_reference(const FiniteSumObjective<Scalar>& obj,
                                                     const HybridPoint<Scalar>& w, Index i,
                                                     Scalar mu, Index samples, RngStream& rng) {
  detail::require_perturbable(obj, w, mu, Block::X);
  if (samples < 1) {
    throw ConfigError("smoothed_gradient_reference: need at least one sample");
  }
  const Index dx = w.layout().d_x();
  VectorX<Scalar> mean = VectorX<Scalar>::Zero(dx);
  VectorX<Scalar> m2 = VectorX<Scalar>::Zero(dx);
  VectorX<Scalar> plus = w.values();
  VectorX<Scalar> minus = w.values();
  for (Index k = 0; k < samples; ++k) {
    const VectorX<Scalar> v = sample_gaussian<Scalar>(rng, dx);
    plus.head(dx) = w.x() + mu * v;
    minus.head(dx) = w.x() - mu * v;
    const Scalar fp = detail::checked_value(obj, plus, i, "perturbed");
    const Scalar fm = detail::checked_value(obj, minus, i, "perturbed");
    const VectorX<Scalar> g = ((fp - fm) / (Scalar(2) * mu)) * v;
    // Welford update.
    const VectorX<Scalar> delta = g - mean;
    mean += delta / static_cast<Scalar>(k + 1);
    m2 += delta.cwiseProduct(g - mean);
  }
  SmoothedGradient<Scalar> out;
  out.mean = mean;
  out.samples = samples;
  if (samples > 1) {
    out.standard_error = (m2 / static_cast<Scalar>(samples - 1) / static_cast<Scalar>(samples)).cwiseSqrt();
  } else {
    out.standard_error = VectorX<Scalar>::Constant(dx, std::numeric_limits<Scalar>::infinity());
  }
  return out;
}

}  // namespace hzo

#endif  // HZO_ESTIMATOR_HPP
