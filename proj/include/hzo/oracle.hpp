// Brute-force reference computations used to validate the rest of the
// library: central-difference gradients, dense finite-difference Hessians
// with eigen-decomposition, and Monte Carlo checks of the two-point
// estimator's bias and second-moment bounds
//
//   E <g, est - grad f>       <= (mu/2) L (d+3)^{3/2} ||g||
//   E ||est - grad f||^2      <= 32 d ||grad f||^2 + 108 mu^2 L^2 d^4
//
// Nothing in the optimizer, probe or planner includes this header.
#ifndef HZO_ORACLE_HPP
#define HZO_ORACLE_HPP

#include "hzo/estimator.hpp"
#include "hzo/objectives.hpp"
#include "hzo/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hzo::oracle {

/// Outcome of comparing an empirical statistic against a theoretical bound.
/// pass == (empirical_lhs <= theoretical_rhs * (1 + margin)).
template <typename Scalar>
struct BoundCheckReport {
  std::string bound_name;
  Scalar empirical_lhs = 0;
  Scalar theoretical_rhs = 0;
  Index trials = 0;
  Scalar margin = 0;
  bool pass = false;
  /// Monte Carlo mean and its standard error; empirical_lhs = mean - 3 * standard_error.
  Scalar mean = 0;
  Scalar standard_error = 0;
};

namespace detail {

template <typename Scalar>
std::function<Scalar(const VectorX<Scalar>&)> value_fn(const FiniteSumObjective<Scalar>& obj,
                                                      std::optional<Index> sample) {
  if (sample) {
    const Index i = *sample;
    return [&obj, i](const VectorX<Scalar>& w) { return obj.value(w, i); };
  }
  return [&obj](const VectorX<Scalar>& w) { return obj.full_value(w); };
}

template <typename Scalar>
std::function<VectorX<Scalar>(const VectorX<Scalar>&)> gradient_fn(
    const FiniteSumObjective<Scalar>& obj, std::optional<Index> sample) {
  if (sample) {
    const Index i = *sample;
    return [&obj, i](const VectorX<Scalar>& w) { return obj.gradient(w, i); };
  }
  return [&obj](const VectorX<Scalar>& w) { return obj.full_gradient(w); };
}

template <typename Scalar>
BoundCheckReport<Scalar> finish(std::string name, Scalar lhs, Scalar rhs, Index trials,
                                Scalar margin) {
  BoundCheckReport<Scalar> r;
  r.bound_name = std::move(name);
  r.empirical_lhs = lhs;
  r.theoretical_rhs = rhs;
  r.trials = trials;
  r.margin = margin;
  r.pass = lhs <= rhs * (Scalar(1) + margin);
  return r;
}

}  // namespace detail

/// Central differences, coordinate by coordinate. sample = nullopt means the
/// full objective.
template <typename Scalar>
VectorX<Scalar> fd_gradient(const FiniteSumObjective<Scalar>& obj, const VectorX<Scalar>& w,
                            std::optional<Index> sample, Scalar h) {
  if (!(h > 0)) {
    throw ConfigError("fd_gradient: h must be positive");
  }
  const auto f = detail::value_fn(obj, sample);
  VectorX<Scalar> g(w.size());
  VectorX<Scalar> p = w;
  for (Index j = 0; j < w.size(); ++j) {
    p[j] = w[j] + h;
    const Scalar up = f(p);
    p[j] = w[j] - h;
    const Scalar down = f(p);
    p[j] = w[j];
    g[j] = (up - down) / (Scalar(2) * h);
  }
  if (!g.allFinite()) {
    throw NumericError("fd_gradient: non-finite value");
  }
  return g;
}

template <typename Scalar>
struct DenseHessian {
  MatrixX<Scalar> matrix;  // symmetrized
  /// ||H - H^T||_F / ||H||_F of the raw difference matrix (0 when H = 0).
  Scalar asymmetry = 0;
};

/// Column j = (grad(w + h e_j) - grad(w - h e_j)) / 2h, then (H + H^T)/2.
template <typename Scalar>
DenseHessian<Scalar> dense_hessian(const FiniteSumObjective<Scalar>& obj,
                                   const VectorX<Scalar>& w, std::optional<Index> sample,
                                   Scalar h) {
  if (!(h > 0)) {
    throw ConfigError("dense_hessian: h must be positive");
  }
  const auto grad = detail::gradient_fn(obj, sample);
  const Index d = w.size();
  MatrixX<Scalar> raw(d, d);
  VectorX<Scalar> p = w;
  for (Index j = 0; j < d; ++j) {
    p[j] = w[j] + h;
    const VectorX<Scalar> up = grad(p);
    p[j] = w[j] - h;
    const VectorX<Scalar> down = grad(p);
    p[j] = w[j];
    raw.col(j) = (up - down) / (Scalar(2) * h);
  }
  if (!raw.allFinite()) {
    throw NumericError("dense_hessian: non-finite value");
  }
  DenseHessian<Scalar> out;
  out.matrix = Scalar(0.5) * (raw + raw.transpose());
  const Scalar norm = raw.norm();
  out.asymmetry = norm > 0 ? (raw - raw.transpose()).norm() / norm : Scalar(0);
  return out;
}

template <typename Scalar>
VectorX<Scalar> block_eigenvalues(const MatrixX<Scalar>& hessian, const BlockLayout& layout,
                                  Block b) {
  const Index off = layout.offset(b);
  const Index n = layout.size(b);
  const MatrixX<Scalar> sub = hessian.block(off, off, n, n);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("block_eigenvalues: eigen-decomposition failed");
  }
  return solver.eigenvalues();
}

/// Largest eigenvalue of the diagonal block.
template <typename Scalar>
Scalar block_lambda_max(const MatrixX<Scalar>& hessian, const BlockLayout& layout, Block b) {
  return block_eigenvalues(hessian, layout, b).maxCoeff();
}

/// Spectral norm (largest |eigenvalue|) of the diagonal block.
template <typename Scalar>
Scalar block_operator_norm(const MatrixX<Scalar>& hessian, const BlockLayout& layout, Block b) {
  return block_eigenvalues(hessian, layout, b).cwiseAbs().maxCoeff();
}

/// sqrt(sum of squared eigenvalues) of the diagonal block.
template <typename Scalar>
Scalar block_frobenius(const MatrixX<Scalar>& hessian, const BlockLayout& layout, Block b) {
  return block_eigenvalues(hessian, layout, b).norm();
}

/// Monte Carlo check of both estimator bounds for f(.; i) at w on the x-block,
/// with g = grad_x f(w; i) and L the x-block gradient Lipschitz constant.
///
/// The bias statistic subtracts the zero-mean control variate
/// <g, (grad_x^T v) v - grad_x>, so only the O(mu) part of the estimator error
/// is sampled. Each report passes when mean - 3 standard errors stays within
/// the bound, i.e. when the data give no significant evidence of a violation.
/// The bias bound gets an additive allowance of 2 dim eps (|f(w + mu v)| +
/// |f(w)|) / mu |<g, v>| averaged over trials, the rounding error of the
/// forward difference.
template <typename Scalar>
std::pair<BoundCheckReport<Scalar>, BoundCheckReport<Scalar>> check_estimator_bounds(
    const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w, Index i, Scalar mu,
    Scalar L, Index trials, RngStream& rng) {
  if (trials < 2) {
    throw ConfigError("check_estimator_bounds: need at least two trials");
  }
  using std::pow;
  using std::sqrt;
  const Index d = w.layout().d_x();
  const VectorX<Scalar> grad = obj.gradient(w.values(), i).head(d);
  const Scalar gnorm = grad.norm();

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar f0 = obj.value(w.values(), i);
  const Scalar eval_ulps = Scalar(2 * w.dim());
  VectorX<Scalar> shifted = w.values();
  Scalar bias_sum(0), bias_sq(0), err_sum(0), err_sq(0), rounding_sum(0);
  for (Index k = 0; k < trials; ++k) {
    const VectorX<Scalar> v = sample_gaussian<Scalar>(rng, d);
    const VectorX<Scalar> est = two_point_estimate(obj, w, i, mu, v);
    const VectorX<Scalar> linear_part = grad.dot(v) * v;
    shifted.head(d) = w.x() + mu * v;
    using std::abs;
    rounding_sum += eval_ulps * eps * (abs(obj.value(shifted, i)) + abs(f0)) / mu * abs(grad.dot(v));
    const Scalar bias = grad.dot(est - linear_part);
    const Scalar err = (est - grad).squaredNorm();
    bias_sum += bias;
    bias_sq += bias * bias;
    err_sum += err;
    err_sq += err * err;
  }
  const auto count = static_cast<Scalar>(trials);
  const auto summarize = [&](Scalar sum, Scalar sq) {
    const Scalar mean = sum / count;
    const Scalar var = std::max(Scalar(0), (sq - count * mean * mean) / (count - 1));
    return std::pair{mean, sqrt(var / count)};
  };

  const auto [bias_mean, bias_se] = summarize(bias_sum, bias_sq);
  const Scalar dd = static_cast<Scalar>(d);
  // The bound holds in exact arithmetic; the rounding allowance covers the
  // floating-point error of the difference quotient, which matters only when
  // the bound itself is near zero (e.g. L = 0).
  const Scalar bias_rhs = mu / Scalar(2) * L * pow(dd + Scalar(3), Scalar(1.5)) * gnorm +
                          rounding_sum / count;
  auto bias = detail::finish<Scalar>("estimator_bias", bias_mean - Scalar(3) * bias_se, bias_rhs,
                                     trials, Scalar(0));
  bias.mean = bias_mean;
  bias.standard_error = bias_se;

  const auto [err_mean, err_se] = summarize(err_sum, err_sq);
  const Scalar err_rhs = Scalar(32) * dd * gnorm * gnorm +
                         Scalar(108) * mu * mu * L * L * pow(dd, Scalar(4));
  auto second = detail::finish<Scalar>("estimator_second_moment", err_mean - Scalar(3) * err_se,
                                       err_rhs, trials, Scalar(0));
  second.mean = err_mean;
  second.standard_error = err_se;
  return {bias, second};
}

/// Checks lambda_max(H_xx) <= ell_x(||grad f||) and lambda_max(H_yy) <=
/// ell_y(||grad f||) at every point on a central-difference Hessian.
/// empirical_lhs is the worst excess lambda_max - ell over points and blocks;
/// theoretical_rhs is the tolerance.
template <typename Scalar>
BoundCheckReport<Scalar> check_hybrid_smoothness(
    const FiniteSumObjective<Scalar>& obj, const std::vector<HybridPoint<Scalar>>& points,
    const std::function<Scalar(Scalar)>& ell_x, const std::function<Scalar(Scalar)>& ell_y,
    Scalar tolerance = Scalar(1e-6), std::optional<Index> sample = std::nullopt,
    Scalar h = Scalar(1e-5)) {
  if (points.empty()) {
    throw ConfigError("check_hybrid_smoothness: empty point set");
  }
  const auto grad = detail::gradient_fn(obj, sample);
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (const auto& p : points) {
    ::hzo::detail::require_layout(obj, p);
    const Scalar gnorm = grad(p.values()).norm();
    const MatrixX<Scalar> hess = dense_hessian(obj, p.values(), sample, h).matrix;
    worst = std::max(worst, block_lambda_max(hess, p.layout(), Block::X) - ell_x(gnorm));
    worst = std::max(worst, block_lambda_max(hess, p.layout(), Block::Y) - ell_y(gnorm));
  }
  // Compare against the absolute tolerance: rhs * (1 + 0).
  return detail::finish<Scalar>("hybrid_smoothness", worst, tolerance,
                                static_cast<Index>(points.size()), Scalar(0));
}

/// Relative error ||a - b|| / max(||a||, ||b||), zero when both vanish.
template <typename Derived1, typename Derived2>
typename Derived1::Scalar relative_error(const Eigen::MatrixBase<Derived1>& a,
                                         const Eigen::MatrixBase<Derived2>& b) {
  using Scalar = typename Derived1::Scalar;
  const Scalar scale = std::max(a.norm(), b.norm());
  return scale > 0 ? (a - b).norm() / scale : Scalar(0);
}

}  // namespace hzo::oracle

#endif  // HZO_ORACLE_HPP
