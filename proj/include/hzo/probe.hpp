// Local smoothness probes built from finite-difference Hessian-vector
// products
//
//   H v ~ (grad f(w + h v) - grad f(w)) / h
//
// along random unit directions restricted to one parameter block. For a unit
// direction v, ||H v||^2 = v^T H^2 v, and E[v^T H^2 v] = ||H||_F^2 / dim when v
// is uniform on the sphere, so two Frobenius estimates are reported:
//
//   frobenius_raw    = sqrt(mean ||H v||^2)
//   frobenius_scaled = sqrt(dim * mean ||H v||^2)   (estimates ||H||_F)
//
// operator_lb = max ||H v|| is a lower bound on the block's operator norm.
// Block probes read H v on the same block they perturb, i.e. they measure the
// diagonal Hessian block.
#ifndef HZO_PROBE_HPP
#define HZO_PROBE_HPP

#include "hzo/objectives.hpp"
#include "hzo/rng.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hzo {

template <typename Scalar>
struct ProbeConfig {
  Scalar h = Scalar(1e-5);
  Index directions = 100;
  Block target = Block::X;

  void validate() const {
    if (!(h > 0) || !std::isfinite(h)) {
      throw ConfigError("ProbeConfig: h must be positive and finite");
    }
    if (directions < 1) {
      throw ConfigError("ProbeConfig: need at least one probe direction");
    }
  }
};

template <typename Scalar>
struct ProbeReport {
  Scalar frobenius_raw = 0;
  Scalar frobenius_scaled = 0;
  Scalar operator_lb = 0;
  /// Standard error of frobenius_scaled (delta method on the mean of ||Hv||^2).
  Scalar standard_error = 0;
  Index directions = 0;
  Scalar h = 0;
  Block block = Block::X;
};

namespace detail {

template <typename Scalar, typename GradientFn>
VectorX<Scalar> finite_difference_hvp(GradientFn&& gradient, const VectorX<Scalar>& w,
                                      const VectorX<Scalar>& base_gradient,
                                      const VectorX<Scalar>& v, Scalar h) {
  if (!(h > 0)) {
    throw ConfigError("hvp: h must be positive");
  }
  const VectorX<Scalar> shifted = gradient(VectorX<Scalar>(w + h * v));
  if (!shifted.allFinite()) {
    throw NumericError("hvp: non-finite gradient at perturbed point");
  }
  return (shifted - base_gradient) / h;
}

template <typename Scalar>
VectorX<Scalar> full_direction(const BlockLayout& layout, const VectorX<Scalar>& v, Block block) {
  if (v.size() == layout.dim() && block == Block::Full) {
    return v;
  }
  return embed(v, layout, block);
}

template <typename Scalar, typename GradientFn>
ProbeReport<Scalar> probe_block(GradientFn&& gradient, const HybridPoint<Scalar>& w,
                                const ProbeConfig<Scalar>& cfg, RngStream& rng) {
  cfg.validate();
  const BlockLayout& layout = w.layout();
  const Index dim = layout.size(cfg.target);
  const VectorX<Scalar> base = gradient(w.values());
  if (!base.allFinite()) {
    throw NumericError("probe: non-finite gradient at base point");
  }
  Scalar sum(0);
  Scalar sum_sq(0);
  Scalar op(0);
  for (Index k = 0; k < cfg.directions; ++k) {
    const VectorX<Scalar> v = full_direction(layout, sample_unit_sphere<Scalar>(rng, dim),
                                             cfg.target);
    const VectorX<Scalar> hv = finite_difference_hvp<Scalar>(gradient, w.values(), base, v, cfg.h);
    const Scalar q = block_segment(hv, layout, cfg.target).squaredNorm();
    sum += q;
    sum_sq += q * q;
    using std::sqrt;
    op = std::max(op, sqrt(q));
  }
  using std::sqrt;
  const auto count = static_cast<Scalar>(cfg.directions);
  const Scalar mean = sum / count;
  ProbeReport<Scalar> r;
  r.frobenius_raw = sqrt(mean);
  r.frobenius_scaled = sqrt(static_cast<Scalar>(dim) * mean);
  r.operator_lb = op;
  r.directions = cfg.directions;
  r.h = cfg.h;
  r.block = cfg.target;
  if (cfg.directions > 1 && mean > 0) {
    const Scalar var = std::max(Scalar(0), (sum_sq - count * mean * mean) / (count - 1));
    const Scalar se_mean = sqrt(var / count);
    r.standard_error = sqrt(static_cast<Scalar>(dim)) * se_mean / (Scalar(2) * sqrt(mean));
  } else if (cfg.directions == 1) {
    r.standard_error = std::numeric_limits<Scalar>::infinity();
  }
  return r;
}

}  // namespace detail

/// (grad f(w + h v) - grad f(w)) / h on the full objective. v has full dimension.
template <typename Scalar>
VectorX<Scalar> hvp(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w,
                    const VectorX<Scalar>& v, Scalar h) {
  detail::require_layout(obj, w);
  if (v.size() != obj.dim()) {
    throw DimensionError("hvp: direction has dimension " + std::to_string(v.size()) +
                         ", expected " + std::to_string(obj.dim()));
  }
  const auto gradient = [&](const VectorX<Scalar>& p) { return obj.full_gradient(p); };
  const VectorX<Scalar> base = gradient(w.values());
  return detail::finite_difference_hvp<Scalar>(gradient, w.values(), base, v, h);
}

/// Same as hvp, on the single sample f(.; i).
template <typename Scalar>
VectorX<Scalar> hvp_sample(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w,
                           Index i, const VectorX<Scalar>& v, Scalar h) {
  detail::require_layout(obj, w);
  if (v.size() != obj.dim()) {
    throw DimensionError("hvp_sample: direction has dimension " + std::to_string(v.size()) +
                         ", expected " + std::to_string(obj.dim()));
  }
  const auto gradient = [&](const VectorX<Scalar>& p) { return obj.gradient(p, i); };
  const VectorX<Scalar> base = gradient(w.values());
  return detail::finite_difference_hvp<Scalar>(gradient, w.values(), base, v, h);
}

template <typename Scalar>
ProbeReport<Scalar> estimate_block_lipschitz(const FiniteSumObjective<Scalar>& obj,
                                             const HybridPoint<Scalar>& w,
                                             const ProbeConfig<Scalar>& cfg, RngStream& rng) {
  detail::require_layout(obj, w);
  return detail::probe_block<Scalar>(
      [&](const VectorX<Scalar>& p) { return obj.full_gradient(p); }, w, cfg, rng);
}

/// Per-sample variant, probing f(.; i) instead of the average.
template <typename Scalar>
ProbeReport<Scalar> estimate_block_lipschitz_sample(const FiniteSumObjective<Scalar>& obj,
                                                    const HybridPoint<Scalar>& w, Index i,
                                                    const ProbeConfig<Scalar>& cfg,
                                                    RngStream& rng) {
  detail::require_layout(obj, w);
  if (i < 0 || i >= obj.num_samples()) {
    throw IndexError("estimate_block_lipschitz_sample: sample index out of range");
  }
  return detail::probe_block<Scalar>(
      [&](const VectorX<Scalar>& p) { return obj.gradient(p, i); }, w, cfg, rng);
}

template <typename Scalar>
struct ScanEntry {
  Scalar grad_norm = 0;
  ProbeReport<Scalar> report;
};

/// Gradient norm and block smoothness estimate at every point, in order.
template <typename Scalar>
std::vector<ScanEntry<Scalar>> trajectory_scan(const FiniteSumObjective<Scalar>& obj,
                                               const std::vector<HybridPoint<Scalar>>& points,
                                               const ProbeConfig<Scalar>& cfg, RngStream& rng) {
  if (points.empty()) {
    throw ConfigError("trajectory_scan: empty point sequence");
  }
  std::vector<ScanEntry<Scalar>> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    detail::require_layout(obj, p);
    ScanEntry<Scalar> e;
    e.grad_norm = obj.full_gradient(p.values()).norm();
    e.report = estimate_block_lipschitz(obj, p, cfg, rng);
    out.push_back(e);
  }
  return out;
}

}  // namespace hzo

#endif  // HZO_PROBE_HPP
