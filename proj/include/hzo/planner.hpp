// Step-size and epoch-budget planning for hybrid reshuffled SGD.
//
// The admissible learning rates and perturbation size are the minima
//
//   eta_x <= min{ 1/(2 L_x,max n), 1/(384 L_x n d_x), sqrt(2/T) / (sigma n L_x,max) }
//   eta_y <= min{ 1/(2 L_y,max n), sqrt(2/T) / (sigma n L_y,max) }
//   mu    <= min{ (G / L_x) 6 / d_x^{3/2}, 1 / (3 L_x T n d_x G) }
//
// and the epoch budget for target stationarity eps at confidence 1 - delta is
//
//   T >= eps^-2 [2/delta + G^2/8] + eps^-4 [(f0 - f* + 3) / n].
//
// The sigma terms drop out when sigma = 0. Constants can be supplied directly
// (exact for quadratics) or estimated from probes, in which case the plan is a
// heuristic rather than a guarantee.
#ifndef HZO_PLANNER_HPP
#define HZO_PLANNER_HPP

#include "hzo/objectives.hpp"
#include "hzo/probe.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hzo {

template <typename Scalar>
struct SmoothnessConstants {
  Scalar L_x = 0;
  Scalar L_y = 0;
  Scalar L_x_max = 0;
  Scalar L_y_max = 0;
  Scalar G = 0;
  Scalar sigma = 0;
  Scalar f_gap = 0;
};

template <typename Scalar>
struct PlanInputs {
  SmoothnessConstants<Scalar> constants;
  Index n = 1;
  Index epochs = 1;
  Index d_x = 1;
};

template <typename Scalar>
struct PlanTerm {
  std::string formula;
  Scalar value = 0;
  /// False for terms that are +inf (sigma = 0) and excluded from the minimum.
  bool active = true;
};

template <typename Scalar>
struct BoundedQuantity {
  std::vector<PlanTerm<Scalar>> terms;
  Scalar value = std::numeric_limits<Scalar>::infinity();
  std::size_t binding = 0;
};

template <typename Scalar>
struct RatePlan {
  BoundedQuantity<Scalar> eta_x;
  BoundedQuantity<Scalar> eta_y;
  BoundedQuantity<Scalar> mu;
};

namespace detail {

template <typename Scalar>
void require_positive(Scalar v, const char* name) {
  if (!(v > 0) || !std::isfinite(v)) {
    throw ConfigError(std::string("planner: ") + name + " must be positive and finite");
  }
}

template <typename Scalar>
BoundedQuantity<Scalar> minimum_of(std::vector<PlanTerm<Scalar>> terms) {
  BoundedQuantity<Scalar> q;
  q.terms = std::move(terms);
  for (std::size_t k = 0; k < q.terms.size(); ++k) {
    if (q.terms[k].active && q.terms[k].value < q.value) {
      q.value = q.terms[k].value;
      q.binding = k;
    }
  }
  return q;
}

}  // namespace detail

template <typename Scalar>
void validate(const SmoothnessConstants<Scalar>& c) {
  detail::require_positive(c.L_x, "L_x");
  detail::require_positive(c.L_y, "L_y");
  detail::require_positive(c.L_x_max, "L_x_max");
  detail::require_positive(c.L_y_max, "L_y_max");
  detail::require_positive(c.G, "G");
  if (!(c.sigma >= 0) || !std::isfinite(c.sigma)) {
    throw ConfigError("planner: sigma must be finite and >= 0");
  }
  if (!(c.f_gap >= 0) || !std::isfinite(c.f_gap)) {
    throw ConfigError("planner: f_gap must be finite and >= 0");
  }
}

template <typename Scalar>
RatePlan<Scalar> plan_rates(const PlanInputs<Scalar>& in) {
  const auto& c = in.constants;
  validate(c);
  if (in.n < 1 || in.epochs < 1 || in.d_x < 1) {
    throw ConfigError("planner: n, T and d_x must be >= 1");
  }
  using std::pow;
  using std::sqrt;
  const auto n = static_cast<Scalar>(in.n);
  const auto T = static_cast<Scalar>(in.epochs);
  const auto d = static_cast<Scalar>(in.d_x);
  const Scalar one(1);
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  const bool noisy = c.sigma > 0;
  const Scalar root = sqrt(Scalar(2) / T);

  RatePlan<Scalar> plan;
  plan.eta_x = detail::minimum_of<Scalar>({
      {"1/(2 L_x_max n)", one / (Scalar(2) * c.L_x_max * n), true},
      {"1/(384 L_x n d_x)", one / (Scalar(384) * c.L_x * n * d), true},
      {"sqrt(2/T)/(sigma n L_x_max)", noisy ? root / (c.sigma * n * c.L_x_max) : inf, noisy},
  });
  plan.eta_y = detail::minimum_of<Scalar>({
      {"1/(2 L_y_max n)", one / (Scalar(2) * c.L_y_max * n), true},
      {"sqrt(2/T)/(sigma n L_y_max)", noisy ? root / (c.sigma * n * c.L_y_max) : inf, noisy},
  });
  plan.mu = detail::minimum_of<Scalar>({
      {"(G/L_x) 6/d_x^(3/2)", (c.G / c.L_x) * (Scalar(6) / pow(d, Scalar(1.5))), true},
      {"1/(3 L_x T n d_x G)", one / (Scalar(3) * c.L_x * T * n * d * c.G), true},
  });
  return plan;
}

template <typename Scalar>
struct EpochBudget {
  Scalar gradient_term = 0;  // eps^-2 [2/delta + G^2/8]
  Scalar gap_term = 0;       // eps^-4 [(f_gap + 3)/n]
  std::uint64_t epochs = 0;
};

template <typename Scalar>
EpochBudget<Scalar> epoch_budget_terms(Scalar epsilon, Scalar delta, Scalar G, Scalar f_gap,
                                       Index n) {
  detail::require_positive(epsilon, "epsilon");
  if (!(delta > 0 && delta < 1)) {
    throw ConfigError("planner: delta must lie in (0, 1)");
  }
  if (!(G >= 0) || !(f_gap >= 0) || n < 1) {
    throw ConfigError("planner: G and f_gap must be >= 0 and n >= 1");
  }
  using std::ceil;
  const Scalar e2 = epsilon * epsilon;
  EpochBudget<Scalar> b;
  b.gradient_term = (Scalar(2) / delta + G * G / Scalar(8)) / e2;
  b.gap_term = ((f_gap + Scalar(3)) / static_cast<Scalar>(n)) / (e2 * e2);
  const Scalar total = ceil(b.gradient_term + b.gap_term);
  if (!(total < Scalar(1.8e19))) {
    throw ConfigError("planner: epoch budget overflows");
  }
  b.epochs = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(total));
  return b;
}

template <typename Scalar>
std::uint64_t epoch_budget(Scalar epsilon, Scalar delta, Scalar G, Scalar f_gap, Index n) {
  return epoch_budget_terms(epsilon, delta, G, f_gap, n).epochs;
}

/// Constants over a set of sample points:
///   L_x, L_y          max block operator_lb of the full objective
///   L_x_max, L_y_max  max block operator_lb over (point, sample)
///   G                 max ||grad f||
///   sigma             max sqrt(sample_variance)
///   f_gap             f(points[0]) - f*, with f* from the argument or the
///                     objective's known minimum.
template <typename Scalar>
SmoothnessConstants<Scalar> estimate_constants(const FiniteSumObjective<Scalar>& obj,
                                               const ProbeConfig<Scalar>& probe,
                                               const std::vector<HybridPoint<Scalar>>& points,
                                               RngStream& rng,
                                               std::optional<Scalar> f_star = std::nullopt) {
  if (points.empty()) {
    throw ConfigError("estimate_constants: need at least one point");
  }
  if (!f_star) {
    f_star = obj.known_minimum();
  }
  if (!f_star) {
    throw ConfigError("estimate_constants: f* is not known for objective '" +
                      std::string(obj.kind()) + "'; supply it explicitly");
  }
  using std::max;
  using std::sqrt;
  SmoothnessConstants<Scalar> c;
  for (const auto& p : points) {
    for (const Block b : {Block::X, Block::Y}) {
      ProbeConfig<Scalar> cfg = probe;
      cfg.target = b;
      Scalar& full = b == Block::X ? c.L_x : c.L_y;
      Scalar& per_sample = b == Block::X ? c.L_x_max : c.L_y_max;
      full = max(full, estimate_block_lipschitz(obj, p, cfg, rng).operator_lb);
      for (Index i = 0; i < obj.num_samples(); ++i) {
        per_sample = max(per_sample,
                         estimate_block_lipschitz_sample(obj, p, i, cfg, rng).operator_lb);
      }
    }
    c.G = max(c.G, obj.full_gradient(p.values()).norm());
    c.sigma = max(c.sigma, sqrt(sample_variance(obj, p)));
  }
  c.f_gap = max(Scalar(0), eval_full(obj, points.front()) - *f_star);
  return c;
}

}  // namespace hzo

#endif  // HZO_PLANNER_HPP
