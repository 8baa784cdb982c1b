// SGD with random reshuffling over a block-partitioned parameter vector.
//
// Each epoch draws a fresh permutation of the samples and visits every sample
// once. A step moves both blocks simultaneously from the same incoming point:
//
//   [x; y] <- [x; y] - diag(eta_x, eta_y) [g_x; g_y]
//
// where each block direction is a zeroth-order estimate, the exact per-sample
// gradient, or zero, according to that block's UpdateMode.
#ifndef HZO_OPTIMIZER_HPP
#define HZO_OPTIMIZER_HPP

#include "hzo/estimator.hpp"
#include "hzo/objectives.hpp"
#include "hzo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hzo {

enum class UpdateMode { ZerothOrder, FirstOrder, Frozen };

inline const char* to_string(UpdateMode m) {
  switch (m) {
    case UpdateMode::ZerothOrder:
      return "zo";
    case UpdateMode::FirstOrder:
      return "fo";
    case UpdateMode::Frozen:
      return "frozen";
  }
  return "?";
}

/// Default is the hybrid scheme: zeroth-order base block, first-order adapter.
struct BlockModes {
  UpdateMode x = UpdateMode::ZerothOrder;
  UpdateMode y = UpdateMode::FirstOrder;
};

template <typename Scalar>
struct LearningRates {
  Scalar eta_x = Scalar(0);
  Scalar eta_y = Scalar(0);
};

template <typename Scalar>
struct OptimizerConfig {
  LearningRates<Scalar> rates;
  ZoConfig<Scalar> zo;
  BlockModes modes;
  Index epochs = 1;
  /// Abort once f exceeds this. Unset means max(1e6 |f(w0)|, 1e6).
  std::optional<Scalar> divergence_threshold;
  std::uint64_t seed = 0;

  void validate() const {
    for (const Scalar eta : {rates.eta_x, rates.eta_y}) {
      if (!(eta >= 0) || !std::isfinite(eta)) {
        throw ConfigError("learning rates must be finite and >= 0");
      }
    }
    if (modes.x == UpdateMode::ZerothOrder || modes.y == UpdateMode::ZerothOrder) {
      zo.validate();
    }
    if (epochs < 1) {
      throw ConfigError("epochs must be >= 1");
    }
    if (divergence_threshold && !(*divergence_threshold > 0)) {
      throw ConfigError("divergence threshold must be positive");
    }
  }

  Scalar resolved_threshold(Scalar initial_value) const {
    if (divergence_threshold) {
      return *divergence_threshold;
    }
    using std::abs;
    return std::max(Scalar(1e6) * abs(initial_value), Scalar(1e6));
  }
};

/// One row of the optimization trace, logged after every step with exact
/// full-objective quantities.
template <typename Scalar>
struct TraceRecord {
  Index epoch = 0;  // 1-based
  Index step = 0;   // 1-based, counted across epochs
  Index sample = 0;
  Scalar f_value = 0;
  Scalar grad_norm = 0;
  Scalar grad_norm_x = 0;
  Scalar grad_norm_y = 0;
};

template <typename Scalar>
using TraceSink = std::function<void(const TraceRecord<Scalar>&)>;

/// Receives the iterate after each step, keyed by the global step number.
template <typename Scalar>
using PointObserver = std::function<void(Index, const HybridPoint<Scalar>&)>;

template <typename Scalar>
struct DivergenceReport {
  Index epoch = 0;
  Index step = 0;
  Scalar f_value = 0;
  Scalar threshold = 0;
};

template <typename Scalar>
struct EpochResult {
  HybridPoint<Scalar> point;
  std::optional<DivergenceReport<Scalar>> divergence;
};

template <typename Scalar>
struct RunResult {
  HybridPoint<Scalar> final_point;
  std::vector<TraceRecord<Scalar>> trace;
  Scalar initial_f = 0;
  /// ||grad f||^2 at the start of every epoch plus the final point.
  std::vector<Scalar> epoch_grad_norm_sq;
  Scalar min_grad_norm_sq = 0;
  Index epochs_completed = 0;
  Index cancellation_warnings = 0;
  std::optional<DivergenceReport<Scalar>> divergence;
};

namespace detail {

template <typename Scalar>
VectorX<Scalar> block_direction(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w,
                                Index i, const OptimizerConfig<Scalar>& cfg, UpdateMode mode,
                                Block block, const VectorX<Scalar>* exact_gradient,
                                RngStream& rng, EstimateDiagnostics* diag) {
  switch (mode) {
    case UpdateMode::ZerothOrder:
      return estimate_block_gradient(obj, w, i, cfg.zo, rng, block, diag);
    case UpdateMode::FirstOrder:
      return block_segment(*exact_gradient, w.layout(), block);
    case UpdateMode::Frozen:
      break;
  }
  return VectorX<Scalar>::Zero(w.layout().size(block));
}

template <typename Scalar>
TraceRecord<Scalar> measure(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w) {
  TraceRecord<Scalar> rec;
  rec.f_value = obj.full_value(w.values());
  const VectorX<Scalar> g = obj.full_gradient(w.values());
  rec.grad_norm = g.norm();
  rec.grad_norm_x = g.head(w.layout().d_x()).norm();
  rec.grad_norm_y = g.tail(w.layout().d_y()).norm();
  return rec;
}

}  // namespace detail

/// One update on sample i. Both block directions are evaluated at w; the x
/// direction draws from rng before the y direction.
template <typename Scalar>
HybridPoint<Scalar> step(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w,
                         Index i, const OptimizerConfig<Scalar>& cfg, RngStream& rng,
                         EstimateDiagnostics* diag = nullptr) {
  detail::require_layout(obj, w);
  const BlockModes modes = cfg.modes;
  std::optional<VectorX<Scalar>> exact;
  if (modes.x == UpdateMode::FirstOrder || modes.y == UpdateMode::FirstOrder) {
    exact = obj.gradient(w.values(), i);
  }
  const VectorX<Scalar>* g = exact ? &*exact : nullptr;
  const VectorX<Scalar> dx = detail::block_direction(obj, w, i, cfg, modes.x, Block::X, g, rng, diag);
  const VectorX<Scalar> dy = detail::block_direction(obj, w, i, cfg, modes.y, Block::Y, g, rng, diag);

  VectorX<Scalar> next = w.values();
  if (modes.x != UpdateMode::Frozen) {
    next.head(w.layout().d_x()) -= cfg.rates.eta_x * dx;
  }
  if (modes.y != UpdateMode::Frozen) {
    next.tail(w.layout().d_y()) -= cfg.rates.eta_y * dy;
  }
  if (!next.allFinite()) {
    throw NumericError("step: non-finite update on sample " + std::to_string(i));
  }
  return {w.layout(), std::move(next)};
}

/// One reshuffled pass. Records are numbered from `first_step + 1`. The
/// divergence threshold defaults to the rule in OptimizerConfig applied to
/// f(w) at the start of this epoch.
template <typename Scalar>
EpochResult<Scalar> run_epoch(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w,
                              const OptimizerConfig<Scalar>& cfg, RngStream& rng,
                              const TraceSink<Scalar>& sink, Index epoch = 1,
                              Index first_step = 0, EstimateDiagnostics* diag = nullptr,
                              const PointObserver<Scalar>& observer = {}) {
  cfg.validate();
  detail::require_layout(obj, w);
  const Scalar threshold = cfg.divergence_threshold
                               ? *cfg.divergence_threshold
                               : cfg.resolved_threshold(obj.full_value(w.values()));
  const std::vector<Index> order = shuffle_permutation(rng, obj.num_samples());
  EpochResult<Scalar> result{w, std::nullopt};
  Index step_index = first_step;
  for (const Index i : order) {
    ++step_index;
    try {
      result.point = step(obj, result.point, i, cfg, rng, diag);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", step " +
                         std::to_string(step_index) + ")");
    }
    TraceRecord<Scalar> rec = detail::measure(obj, result.point);
    rec.epoch = epoch;
    rec.step = step_index;
    rec.sample = i;
    if (sink) {
      sink(rec);
    }
    if (observer) {
      observer(step_index, result.point);
    }
    if (!std::isfinite(rec.f_value) || rec.f_value > threshold) {
      result.divergence = DivergenceReport<Scalar>{epoch, step_index, rec.f_value, threshold};
      return result;
    }
  }
  return result;
}

/// cfg.epochs reshuffled passes, stopping early on divergence.
template <typename Scalar>
RunResult<Scalar> run(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w0,
                      const OptimizerConfig<Scalar>& cfg, RngStream& rng,
                      const TraceSink<Scalar>& sink = {},
                      const PointObserver<Scalar>& observer = {}) {
  cfg.validate();
  detail::require_layout(obj, w0);
  RunResult<Scalar> out{w0, {}, Scalar(0), {}, Scalar(0), 0, 0, std::nullopt};
  const TraceRecord<Scalar> start = detail::measure(obj, w0);
  out.initial_f = start.f_value;
  out.epoch_grad_norm_sq.push_back(start.grad_norm * start.grad_norm);

  OptimizerConfig<Scalar> resolved = cfg;
  resolved.divergence_threshold = cfg.resolved_threshold(start.f_value);

  const TraceSink<Scalar> collect = [&](const TraceRecord<Scalar>& rec) {
    out.trace.push_back(rec);
    if (sink) {
      sink(rec);
    }
  };
  EstimateDiagnostics diag;
  for (Index t = 1; t <= cfg.epochs; ++t) {
    EpochResult<Scalar> epoch = run_epoch(obj, out.final_point, resolved, rng, collect, t,
                                          static_cast<Index>(out.trace.size()), &diag, observer);
    out.final_point = std::move(epoch.point);
    if (epoch.divergence) {
      out.divergence = epoch.divergence;
      break;
    }
    ++out.epochs_completed;
    const TraceRecord<Scalar>& last = out.trace.back();
    out.epoch_grad_norm_sq.push_back(last.grad_norm * last.grad_norm);
  }
  out.cancellation_warnings = diag.cancellation_warnings;
  out.min_grad_norm_sq = *std::min_element(out.epoch_grad_norm_sq.begin(),
                                           out.epoch_grad_norm_sq.end());
  return out;
}

/// Seeds a stream from cfg.seed (stream id 0) and runs.
template <typename Scalar>
RunResult<Scalar> run(const FiniteSumObjective<Scalar>& obj, const HybridPoint<Scalar>& w0,
                      const OptimizerConfig<Scalar>& cfg) {
  RngStream rng(cfg.seed, 0);
  return run(obj, w0, cfg, rng);
}

/// Running means (1/t) sum_{s<t} ||grad f(x_s)||^2 over epoch iterates.
template <typename Scalar>
std::vector<Scalar> running_mean(const std::vector<Scalar>& values) {
  std::vector<Scalar> out;
  out.reserve(values.size());
  Scalar sum(0);
  for (std::size_t k = 0; k < values.size(); ++k) {
    sum += values[k];
    out.push_back(sum / static_cast<Scalar>(k + 1));
  }
  return out;
}

}  // namespace hzo

#endif  // HZO_OPTIMIZER_HPP
