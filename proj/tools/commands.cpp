#include "commands.hpp"

#include "hzo/oracle.hpp"
#include "hzo/planner.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace hzo::cli {

namespace {

using io::Json;

// Stream ids derived from the experiment seed.
constexpr std::uint64_t kOptimizerStream = 0;
constexpr std::uint64_t kProbeStream = 1;
constexpr std::uint64_t kInitialPointStream = 2;

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) {
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: field '") + key + "': " + e.what());
  }
}

template <typename T>
T get_required(const Json& j, const char* key, const char* section) {
  if (!j.contains(key) || j.at(key).is_null()) {
    throw ConfigError(std::string("config: missing '") + section + "." + key + "'");
  }
  return get_or<T>(j, key, T{});
}

const Json& section(const Json& config, const char* key) {
  static const Json empty = Json::object();
  if (!config.contains(key)) {
    return empty;
  }
  if (!config.at(key).is_object()) {
    throw ConfigError(std::string("config: '") + key + "' must be an object");
  }
  return config.at(key);
}

UpdateMode parse_mode(const std::string& s) {
  if (s == "zo") return UpdateMode::ZerothOrder;
  if (s == "fo") return UpdateMode::FirstOrder;
  if (s == "frozen") return UpdateMode::Frozen;
  throw ConfigError("config: unknown update mode '" + s + "' (expected zo, fo or frozen)");
}

Block parse_block(const std::string& s) {
  if (s == "x") return Block::X;
  if (s == "y") return Block::Y;
  if (s == "full") return Block::Full;
  throw ConfigError("config: unknown block '" + s + "' (expected x, y or full)");
}

HybridPointd parse_initial_point(const Json& spec, const BlockLayout& layout, std::uint64_t seed,
                                 Json& resolved) {
  const auto kind = get_or<std::string>(spec, "kind", "zeros");
  resolved["kind"] = kind;
  if (kind == "zeros") {
    return HybridPointd::zeros(layout);
  }
  if (kind == "fill") {
    const double x = get_or(spec, "x", 0.0);
    const double y = get_or(spec, "y", 0.0);
    resolved["x"] = x;
    resolved["y"] = y;
    VectorX<double> v(layout.dim());
    v.head(layout.d_x()).setConstant(x);
    v.tail(layout.d_y()).setConstant(y);
    return {layout, v};
  }
  if (kind == "explicit") {
    const auto values = get_required<std::vector<double>>(spec, "values", "initial_point");
    if (static_cast<Index>(values.size()) != layout.dim()) {
      throw ConfigError("config: initial_point.values has " + std::to_string(values.size()) +
                        " entries, objective has dimension " + std::to_string(layout.dim()));
    }
    resolved["values"] = values;
    return {layout, Eigen::Map<const VectorX<double>>(values.data(), layout.dim())};
  }
  if (kind == "random") {
    const double scale = get_or(spec, "scale", 1.0);
    resolved["scale"] = scale;
    RngStream rng(seed, kInitialPointStream);
    return {layout, scale * sample_gaussian<double>(rng, layout.dim())};
  }
  throw ConfigError("config: unknown initial_point.kind '" + kind + "'");
}

ProbeSchedule parse_probe(const Json& spec, Json& resolved) {
  ProbeSchedule s;
  s.every = get_or<Index>(spec, "every", 0);
  s.probe.h = get_or(spec, "h", s.probe.h);
  s.probe.directions = get_or<Index>(spec, "directions", s.probe.directions);
  if (spec.contains("blocks")) {
    s.blocks.clear();
    for (const auto& b : get_or<std::vector<std::string>>(spec, "blocks", {})) {
      s.blocks.push_back(parse_block(b));
    }
    if (s.blocks.empty()) {
      throw ConfigError("config: probe.blocks must not be empty");
    }
  }
  if (s.every < 0) {
    throw ConfigError("config: probe.every must be >= 0");
  }
  s.probe.validate();
  resolved["every"] = s.every;
  resolved["h"] = s.probe.h;
  resolved["directions"] = s.probe.directions;
  std::vector<std::string> names;
  for (const Block b : s.blocks) {
    names.emplace_back(to_string(b));
  }
  resolved["blocks"] = names;
  return s;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw ConfigError("cannot write '" + path + "'");
  }
  f << content;
}

/// Writes the primary output to opts.out (plus a metadata sidecar) or to io.out.
void emit(const CommonOptions& opts, Streams io, const std::string& content,
          const Json& metadata) {
  if (opts.out.empty()) {
    io.out << content;
    return;
  }
  write_text_file(opts.out, content);
  write_text_file(opts.out + ".meta.json", metadata.dump(2) + "\n");
}

Json metadata(const char* command, const Experiment& e) {
  Json m;
  m["command"] = command;
  m["seed"] = e.seed;
  m["config"] = e.resolved;
  return m;
}

std::string base_dir_of(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  return parent.empty() ? std::string(".") : parent.string();
}

Experiment load(const CommonOptions& opts) {
  if (opts.config.empty()) {
    throw ConfigError("--config is required");
  }
  return parse_experiment(io::read_json_file(opts.config), base_dir_of(opts.config), opts.seed);
}

const HybridPointd& require_initial_point(const Experiment& e) {
  if (!e.initial_point) {
    throw ConfigError("config: no initial point");
  }
  return *e.initial_point;
}

void print_summary(std::ostream& log, const RunResult<double>& r) {
  const double final_f = r.trace.empty() ? r.initial_f : r.trace.back().f_value;
  log << "final_f=" << io::format_real(final_f)
      << " min_grad_norm_sq=" << io::format_real(r.min_grad_norm_sq)
      << " epochs_completed=" << r.epochs_completed << " diverged=" << (r.divergence ? 1 : 0);
  if (r.cancellation_warnings > 0) {
    log << " cancellation_warnings=" << r.cancellation_warnings;
  }
  log << '\n';
  if (r.divergence) {
    log << "divergence: epoch " << r.divergence->epoch << " step " << r.divergence->step
        << " f=" << io::format_real(r.divergence->f_value)
        << " threshold=" << io::format_real(r.divergence->threshold) << '\n';
  }
}

std::vector<io::ProbeRow> probe_points(const FiniteSumObjective<double>& obj,
                                       const std::vector<HybridPointd>& points,
                                       const ProbeSchedule& schedule, std::uint64_t seed) {
  RngStream rng(seed, kProbeStream);
  std::vector<io::ProbeRow> rows;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double gnorm = obj.full_gradient(points[k].values()).norm();
    for (const Block b : schedule.blocks) {
      ProbeConfig<double> cfg = schedule.probe;
      cfg.target = b;
      rows.push_back({static_cast<Index>(k), gnorm,
                      estimate_block_lipschitz(obj, points[k], cfg, rng)});
    }
  }
  return rows;
}

/// Runs the optimizer, keeping the initial point and every `every`-th iterate.
RunResult<double> run_with_checkpoints(const Experiment& e, Index every,
                                       std::vector<HybridPointd>* checkpoints) {
  RngStream rng(e.seed, kOptimizerStream);
  const HybridPointd& w0 = require_initial_point(e);
  PointObserver<double> observer;
  if (checkpoints != nullptr && every > 0) {
    checkpoints->push_back(w0);
    observer = [&](Index step, const HybridPointd& w) {
      if (step % every == 0) {
        checkpoints->push_back(w);
      }
    };
  }
  return run(*e.objective, w0, e.optimizer, rng, {}, observer);
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& body) {
  try {
    return body();
  } catch (const NumericError& e) {
    log << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::invalid_argument& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::out_of_range& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Json::exception& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace

Experiment parse_experiment(const Json& config, const std::string& base_dir,
                            std::optional<std::uint64_t> seed_override) {
  if (!config.is_object()) {
    throw ConfigError("config: expected a JSON object");
  }
  Experiment e;
  e.seed = seed_override ? *seed_override : get_or<std::uint64_t>(config, "seed", 0);
  e.resolved["seed"] = e.seed;

  Json objective_spec;
  if (config.contains("objective_file")) {
    auto path = std::filesystem::path(config.at("objective_file").get<std::string>());
    if (path.is_relative()) {
      path = std::filesystem::path(base_dir) / path;
    }
    objective_spec = io::read_json_file(path.string());
  } else if (config.contains("objective")) {
    objective_spec = config.at("objective");
  } else {
    throw ConfigError("config: need 'objective' or 'objective_file'");
  }
  e.objective = io::make_objective(objective_spec);
  e.resolved["objective"] = objective_spec;

  const BlockLayout layout = e.objective->layout();
  Json point_resolved;
  e.initial_point = parse_initial_point(section(config, "initial_point"), layout, e.seed,
                                        point_resolved);
  e.resolved["initial_point"] = point_resolved;

  const Json& opt = section(config, "optimizer");
  OptimizerConfig<double>& c = e.optimizer;
  c.modes.x = parse_mode(get_or<std::string>(opt, "x_mode", "zo"));
  c.modes.y = parse_mode(get_or<std::string>(opt, "y_mode", "fo"));
  c.rates.eta_x = get_or(opt, "eta_x", 0.0);
  c.rates.eta_y = get_or(opt, "eta_y", 0.0);
  c.zo.mu = get_or(opt, "mu", c.zo.mu);
  c.zo.directions = get_or<Index>(opt, "directions", c.zo.directions);
  c.epochs = get_or<Index>(opt, "epochs", c.epochs);
  if (opt.contains("divergence_threshold") && !opt.at("divergence_threshold").is_null()) {
    c.divergence_threshold = get_or(opt, "divergence_threshold", 0.0);
  }
  c.seed = e.seed;
  c.validate();
  Json& ro = e.resolved["optimizer"];
  ro["x_mode"] = to_string(c.modes.x);
  ro["y_mode"] = to_string(c.modes.y);
  ro["eta_x"] = c.rates.eta_x;
  ro["eta_y"] = c.rates.eta_y;
  ro["mu"] = c.zo.mu;
  ro["directions"] = c.zo.directions;
  ro["epochs"] = c.epochs;
  ro["divergence_threshold"] =
      c.divergence_threshold ? Json(*c.divergence_threshold) : Json("max(1e6*|f(w0)|, 1e6)");

  Json probe_resolved;
  e.schedule = parse_probe(section(config, "probe"), probe_resolved);
  e.resolved["probe"] = probe_resolved;

  for (const char* extra : {"sweep", "trajectory", "plan"}) {
    if (config.contains(extra)) {
      e.resolved[extra] = config.at(extra);
    }
  }
  return e;
}

int cmd_run(const CommonOptions& opts, Streams io) {
  return guarded(io.log, [&] {
    const Experiment e = load(opts);
    std::vector<HybridPointd> checkpoints;
    const bool probing = e.schedule.every > 0 && !opts.out.empty();
    const RunResult<double> r =
        run_with_checkpoints(e, e.schedule.every, probing ? &checkpoints : nullptr);
    std::ostringstream csv;
    io::write_trace_csv(csv, r.trace);
    emit(opts, io, csv.str(), metadata("run", e));
    if (probing) {
      std::ostringstream probe_csv;
      io::write_probe_csv(probe_csv, probe_points(*e.objective, checkpoints, e.schedule, e.seed));
      write_text_file(opts.out + ".probe.csv", probe_csv.str());
    }
    print_summary(io.log, r);
    return r.divergence ? kDivergence : kSuccess;
  });
}

int cmd_sweep(const CommonOptions& opts, Streams io) {
  return guarded(io.log, [&] {
    const Experiment e = load(opts);
    const Json& sweep = section(e.resolved, "sweep");
    const auto etas_x = get_required<std::vector<double>>(sweep, "eta_x", "sweep");
    const auto etas_y = get_required<std::vector<double>>(sweep, "eta_y", "sweep");
    if (etas_x.empty() || etas_y.empty()) {
      throw ConfigError("config: sweep grids must not be empty");
    }
    const HybridPointd& w0 = require_initial_point(e);

    std::optional<double> target;
    const Json& t = section(sweep, "target");
    if (t.contains("f")) {
      target = get_or(t, "f", 0.0);
    } else if (t.contains("fraction")) {
      const double fraction = get_or(t, "fraction", 0.0);
      std::optional<double> f_star = e.objective->known_minimum();
      if (t.contains("f_star")) {
        f_star = get_or(t, "f_star", 0.0);
      }
      if (!f_star) {
        throw ConfigError("config: sweep.target.fraction needs a known minimum or target.f_star");
      }
      const double f0 = e.objective->full_value(w0.values());
      target = *f_star + fraction * (f0 - *f_star);
    }

    std::ostringstream csv;
    csv << io::kSweepHeader << '\n';
    for (const double eta_x : etas_x) {
      for (const double eta_y : etas_y) {
        OptimizerConfig<double> cfg = e.optimizer;
        cfg.rates = {eta_x, eta_y};
        cfg.validate();
        RngStream rng(e.seed, kOptimizerStream);
        double final_f = std::numeric_limits<double>::quiet_NaN();
        bool diverged = true;
        std::optional<Index> hit;
        try {
          const RunResult<double> r = run(*e.objective, w0, cfg, rng);
          final_f = r.trace.back().f_value;
          diverged = r.divergence.has_value();
          if (target) {
            for (const auto& rec : r.trace) {
              if (rec.f_value < *target) {
                hit = rec.step;
                break;
              }
            }
          }
        } catch (const NumericError& err) {
          io.log << "cell eta_x=" << io::format_real(eta_x) << " eta_y=" << io::format_real(eta_y)
                 << ": numeric failure: " << err.what() << '\n';
        }
        csv << io::format_real(eta_x) << ',' << io::format_real(eta_y) << ','
            << io::format_real(final_f) << ',' << (diverged ? 1 : 0) << ','
            << (hit ? std::to_string(*hit) : std::string()) << '\n';
      }
    }
    Json meta = metadata("sweep", e);
    if (target) {
      meta["target_f"] = *target;
    }
    emit(opts, io, csv.str(), meta);
    io.log << "cells=" << etas_x.size() * etas_y.size() << '\n';
    return kSuccess;
  });
}

int cmd_probe(const CommonOptions& opts, Streams io) {
  return guarded(io.log, [&] {
    const Experiment e = load(opts);
    std::vector<HybridPointd> points;
    int status = kSuccess;
    const Json& traj = section(e.resolved, "trajectory");
    if (traj.contains("points")) {
      const auto raw = get_or<std::vector<std::vector<double>>>(traj, "points", {});
      const BlockLayout layout = e.objective->layout();
      for (const auto& p : raw) {
        if (static_cast<Index>(p.size()) != layout.dim()) {
          throw ConfigError("config: trajectory point has wrong dimension");
        }
        points.emplace_back(layout, Eigen::Map<const VectorX<double>>(p.data(), layout.dim()));
      }
    } else {
      if (e.schedule.every < 1) {
        throw ConfigError("config: probe.every must be >= 1 to build a trajectory");
      }
      const RunResult<double> r = run_with_checkpoints(e, e.schedule.every, &points);
      print_summary(io.log, r);
      if (r.divergence) {
        status = kDivergence;
      }
    }
    if (points.empty()) {
      throw ConfigError("config: empty trajectory");
    }
    std::ostringstream csv;
    io::write_probe_csv(csv, probe_points(*e.objective, points, e.schedule, e.seed));
    emit(opts, io, csv.str(), metadata("probe", e));
    io.log << "points=" << points.size() << '\n';
    return status;
  });
}

namespace {

void print_quantity(std::ostream& os, const char* name, const BoundedQuantity<double>& q) {
  os << name << " candidates:\n";
  for (std::size_t k = 0; k < q.terms.size(); ++k) {
    const auto& t = q.terms[k];
    os << "  " << t.formula << " = " << (t.active ? io::format_real(t.value) : "inf (omitted)");
    if (k == q.binding) {
      os << "  <- binding";
    }
    os << '\n';
  }
}

Json quantity_json(const BoundedQuantity<double>& q) {
  Json j;
  j["value"] = q.value;
  j["binding"] = q.terms[q.binding].formula;
  for (const auto& t : q.terms) {
    j["terms"].push_back({{"formula", t.formula},
                          {"value", t.active ? Json(t.value) : Json(nullptr)},
                          {"active", t.active}});
  }
  return j;
}

}  // namespace

int cmd_plan(const PlanOptions& opts, Streams io) {
  return guarded(io.log, [&] {
    if (opts.config.empty()) {
      throw ConfigError("--config is required");
    }
    const Json config = io::read_json_file(opts.config);
    PlanInputs<double> in;
    std::optional<double> epsilon;
    std::optional<double> delta;
    std::optional<Index> epochs;
    Json plan_section;

    if (opts.estimate) {
      const Experiment e = parse_experiment(config, base_dir_of(opts.config), opts.seed);
      plan_section = section(e.resolved, "plan");
      std::optional<double> f_star;
      if (plan_section.contains("f_star")) {
        f_star = get_or(plan_section, "f_star", 0.0);
      }
      RngStream rng(e.seed, kProbeStream);
      in.constants = estimate_constants(*e.objective, e.schedule.probe,
                                        {require_initial_point(e)}, rng, f_star);
      in.n = e.objective->num_samples();
      in.d_x = e.objective->layout().d_x();
      epochs = e.optimizer.epochs;
    } else {
      if (!config.is_object()) {
        throw ConfigError("constants file: expected a JSON object");
      }
      const char* s = "constants";
      auto& c = in.constants;
      c.L_x = get_required<double>(config, "L_x", s);
      c.L_y = get_required<double>(config, "L_y", s);
      c.L_x_max = get_required<double>(config, "L_x_max", s);
      c.L_y_max = get_required<double>(config, "L_y_max", s);
      c.G = get_required<double>(config, "G", s);
      c.sigma = get_required<double>(config, "sigma", s);
      c.f_gap = get_or(config, "f_gap", 0.0);
      in.n = get_required<Index>(config, "n", s);
      in.d_x = get_required<Index>(config, "d_x", s);
      if (config.contains("T")) {
        epochs = get_required<Index>(config, "T", s);
      }
      plan_section = config;
    }
    if (plan_section.contains("epsilon")) {
      epsilon = get_or(plan_section, "epsilon", 0.0);
      delta = get_required<double>(plan_section, "delta", "plan");
    }

    std::ostringstream report;
    std::optional<EpochBudget<double>> budget;
    if (epsilon) {
      budget = epoch_budget_terms(*epsilon, *delta, in.constants.G, in.constants.f_gap, in.n);
    }
    if (!epochs) {
      if (!budget) {
        throw ConfigError("plan: give T or epsilon and delta");
      }
      epochs = static_cast<Index>(budget->epochs);
    }
    in.epochs = *epochs;
    const RatePlan<double> plan = plan_rates(in);

    const auto& c = in.constants;
    report << "constants: L_x=" << io::format_real(c.L_x) << " L_y=" << io::format_real(c.L_y)
           << " L_x_max=" << io::format_real(c.L_x_max)
           << " L_y_max=" << io::format_real(c.L_y_max) << " G=" << io::format_real(c.G)
           << " sigma=" << io::format_real(c.sigma) << " f_gap=" << io::format_real(c.f_gap)
           << '\n';
    report << "inputs: n=" << in.n << " T=" << in.epochs << " d_x=" << in.d_x << '\n';
    print_quantity(report, "eta_x", plan.eta_x);
    print_quantity(report, "eta_y", plan.eta_y);
    print_quantity(report, "mu", plan.mu);
    if (budget) {
      report << "epoch budget: eps^-2 [2/delta + G^2/8] = " << io::format_real(budget->gradient_term)
             << ", eps^-4 [(f_gap + 3)/n] = " << io::format_real(budget->gap_term)
             << ", T = " << budget->epochs << '\n';
    }
    report << "result: eta_x=" << io::format_real(plan.eta_x.value)
           << " eta_y=" << io::format_real(plan.eta_y.value)
           << " mu=" << io::format_real(plan.mu.value) << " T=" << in.epochs << '\n';
    io.out << report.str();

    if (!opts.out.empty()) {
      Json j;
      j["constants"] = {{"L_x", c.L_x},         {"L_y", c.L_y}, {"L_x_max", c.L_x_max},
                        {"L_y_max", c.L_y_max}, {"G", c.G},     {"sigma", c.sigma},
                        {"f_gap", c.f_gap}};
      j["n"] = in.n;
      j["T"] = in.epochs;
      j["d_x"] = in.d_x;
      j["eta_x"] = quantity_json(plan.eta_x);
      j["eta_y"] = quantity_json(plan.eta_y);
      j["mu"] = quantity_json(plan.mu);
      if (budget) {
        j["epoch_budget"] = budget->epochs;
      }
      write_text_file(opts.out, j.dump(2) + "\n");
    }
    return kSuccess;
  });
}

namespace {

struct CheckRow {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  bool pass = false;
};

CheckRow row_from(const std::string& label, const oracle::BoundCheckReport<double>& r) {
  return {label, r.empirical_lhs, r.theoretical_rhs, r.pass};
}

std::vector<CheckRow> gradient_checks(std::uint64_t seed) {
  std::vector<CheckRow> rows;
  const BlockLayout layout(3, 2);
  RngStream data(seed, 10);
  std::vector<std::unique_ptr<FiniteSumObjective<double>>> objs;
  objs.push_back(std::make_unique<BlockQuadratic<double>>(
      make_block_quadratic<double>(layout, 4, 5.0, 0.5, 1.0, data)));
  objs.push_back(std::make_unique<DenseQuadratic<double>>(
      make_dense_quadratic<double>(layout, 4, 1.0, data)));
  objs.push_back(std::make_unique<LinearObjective<double>>(make_linear<double>(layout, 4, 1.0, data)));
  objs.push_back(std::make_unique<CoshObjective<double>>(make_cosh<double>(layout, 4, 0.5, data)));
  objs.push_back(std::make_unique<LogisticObjective<double>>(
      make_logistic<double>(layout, 4, 1.0, 0.1, data)));
  RngStream points(seed, 11);
  for (const auto& obj : objs) {
    double worst = 0;
    for (int k = 0; k < 10; ++k) {
      const VectorX<double> w = sample_gaussian<double>(points, layout.dim());
      const auto i = static_cast<Index>(points.below(static_cast<std::uint64_t>(obj->num_samples())));
      worst = std::max(worst, oracle::relative_error(obj->gradient(w, i),
                                                     oracle::fd_gradient(*obj, w, {i}, 1e-5)));
      worst = std::max(worst, oracle::relative_error(obj->full_gradient(w),
                                                     oracle::fd_gradient(*obj, w, {}, 1e-5)));
    }
    rows.push_back({"gradient_fd/" + std::string(obj->kind()), worst, 1e-6, worst <= 1e-6});
  }
  return rows;
}

std::vector<CheckRow> estimator_checks(std::uint64_t seed) {
  std::vector<CheckRow> rows;
  std::uint64_t stream = 100;
  for (const Index dx : {Index{2}, Index{8}}) {
    const BlockLayout layout(dx, 2);
    RngStream data(seed, stream++);
    const LinearObjective<double> linear = make_linear<double>(layout, 1, 1.0, data);
    const BlockQuadratic<double> quad = make_block_quadratic<double>(layout, 1, 4.0, 1.0, 1.0, data);
    const HybridPointd w(layout, sample_gaussian<double>(data, layout.dim()));
    for (const double mu : {1e-2, 1e-3, 1e-4}) {
      char suffix[64];
      std::snprintf(suffix, sizeof suffix, "/d_x=%ld/mu=%g", static_cast<long>(dx), mu);
      RngStream rng(seed, stream++);
      const auto [lb, lv] = oracle::check_estimator_bounds<double>(linear, w, 0, mu, 0.0, 10000, rng);
      rows.push_back(row_from("linear/" + lb.bound_name + suffix, lb));
      rows.push_back(row_from("linear/" + lv.bound_name + suffix, lv));
      const auto [qb, qv] =
          oracle::check_estimator_bounds<double>(quad, w, 0, mu, quad.a_x(), 10000, rng);
      rows.push_back(row_from("block_quadratic/" + qb.bound_name + suffix, qb));
      rows.push_back(row_from("block_quadratic/" + qv.bound_name + suffix, qv));
    }
  }
  return rows;
}

std::vector<CheckRow> smoothness_checks(std::uint64_t seed, bool negative_control) {
  std::vector<CheckRow> rows;
  RngStream rng(seed, 200);
  const BlockLayout layout(3, 3);
  const BlockQuadratic<double> quad = make_block_quadratic<double>(layout, 3, 100.0, 1.0, 1.0, rng);
  std::vector<HybridPointd> quad_points;
  for (int k = 0; k < 5; ++k) {
    quad_points.emplace_back(layout, sample_gaussian<double>(rng, layout.dim()));
  }
  const auto r1 = oracle::check_hybrid_smoothness<double>(
      quad, quad_points, [](double) { return 100.0; }, [](double) { return 1.0; });
  rows.push_back(row_from("hybrid_smoothness/block_quadratic", r1));

  const CoshObjective<double> cosh_obj = make_cosh<double>(layout, 1, 0.5, rng);
  std::vector<HybridPointd> cosh_points;
  while (cosh_points.size() < 100) {
    VectorX<double> w = sample_gaussian<double>(rng, layout.dim());
    if (w.norm() <= 3.0) {
      cosh_points.emplace_back(layout, w);
    }
  }
  const auto envelope = [](double u) { return 1.0 + u; };
  const auto r2 = oracle::check_hybrid_smoothness<double>(cosh_obj, cosh_points, envelope, envelope);
  rows.push_back(row_from("hybrid_smoothness/cosh", r2));

  // Probe lower bounds never exceed the dense spectral norm.
  const LogisticObjective<double> logistic = make_logistic<double>(layout, 8, 1.0, 0.05, rng);
  const HybridPointd w(layout, sample_gaussian<double>(rng, layout.dim()));
  const MatrixX<double> hess = oracle::dense_hessian(logistic, w.values(), {}, 1e-5).matrix;
  double worst = -1e300;
  for (const Block b : {Block::X, Block::Y}) {
    ProbeConfig<double> cfg;
    cfg.target = b;
    const double op = estimate_block_lipschitz(logistic, w, cfg, rng).operator_lb;
    worst = std::max(worst, op - oracle::block_operator_norm(hess, layout, b));
  }
  rows.push_back({"probe_vs_dense/logistic", worst, 1e-6, worst <= 1e-6});

  if (negative_control) {
    const auto r3 = oracle::check_hybrid_smoothness<double>(
        quad, quad_points, [](double) { return 50.0; }, [](double) { return 1.0; });
    rows.push_back(row_from("negative_control/half_envelope", r3));
  }
  return rows;
}

}  // namespace

int cmd_check(const CheckOptions& opts, Streams io) {
  return guarded(io.log, [&] {
    std::vector<CheckRow> rows = gradient_checks(opts.seed);
    for (auto&& group : {estimator_checks(opts.seed),
                         smoothness_checks(opts.seed, opts.negative_control)}) {
      rows.insert(rows.end(), group.begin(), group.end());
    }
    std::ostringstream table;
    std::size_t failures = 0;
    char line[256];
    std::snprintf(line, sizeof line, "%-58s %14s %14s  %s\n", "check", "lhs", "rhs", "result");
    table << line;
    for (const auto& r : rows) {
      std::snprintf(line, sizeof line, "%-58s %14.6g %14.6g  %s\n", r.name.c_str(), r.lhs, r.rhs,
                    r.pass ? "PASS" : "FAIL");
      table << line;
      failures += r.pass ? 0 : 1;
    }
    table << rows.size() - failures << "/" << rows.size() << " checks passed\n";
    if (opts.out.empty()) {
      io.out << table.str();
    } else {
      write_text_file(opts.out, table.str());
    }
    for (const auto& r : rows) {
      if (!r.pass) {
        io.log << "FAILED: " << r.name << '\n';
      }
    }
    return failures == 0 ? kSuccess : kCheckFailure;
  });
}

int run_cli(int argc, char** argv, Streams io) {
  CLI::App app{"Hybrid zeroth-/first-order SGD with random reshuffling"};
  app.require_subcommand(1);

  CommonOptions common;
  PlanOptions plan;
  CheckOptions check;
  std::uint64_t seed = 0;

  const auto add_common = [&](CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config, "Experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", o.out, "Output path (default: stdout)");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "Run the optimizer and write the trace CSV");
  add_common(run_cmd, common);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run a learning-rate grid");
  add_common(sweep_cmd, common);
  CLI::App* probe_cmd = app.add_subcommand("probe", "Probe local smoothness along a trajectory");
  add_common(probe_cmd, common);
  CLI::App* plan_cmd = app.add_subcommand("plan", "Plan learning rates and the epoch budget");
  plan_cmd->add_option("--config", plan.config, "Constants file, or experiment config with --estimate")
      ->required();
  plan_cmd->add_flag("--estimate", plan.estimate, "Estimate constants from the experiment");
  plan_cmd->add_option("--seed", seed, "Override the config seed");
  plan_cmd->add_option("--out", plan.out, "Also write the plan as JSON");
  CLI::App* check_cmd = app.add_subcommand("check", "Run the oracle suite");
  check_cmd->add_option("--seed", check.seed, "Seed for the oracle suite");
  check_cmd->add_flag("--negative-control", check.negative_control,
                      "Add a check that must fail (envelope too small)");
  check_cmd->add_option("--out", check.out, "Write the table to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    io.out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    io.log << e.what() << '\n';
    return kConfigError;
  }

  const auto seed_given = [&](CLI::App* sub) {
    return sub->count("--seed") > 0 ? std::optional<std::uint64_t>(seed) : std::nullopt;
  };
  if (run_cmd->parsed()) {
    common.seed = seed_given(run_cmd);
    return cmd_run(common, io);
  }
  if (sweep_cmd->parsed()) {
    common.seed = seed_given(sweep_cmd);
    return cmd_sweep(common, io);
  }
  if (probe_cmd->parsed()) {
    common.seed = seed_given(probe_cmd);
    return cmd_probe(common, io);
  }
  if (plan_cmd->parsed()) {
    plan.seed = seed_given(plan_cmd);
    return cmd_plan(plan, io);
  }
  return cmd_check(check, io);
}

}  // namespace hzo::cli
