// Subcommands of the hzo command-line tool. Each returns a process exit code:
//   0 success, 1 check failure, 2 config error, 3 divergence, 4 numeric failure.
#ifndef HZO_TOOLS_COMMANDS_HPP
#define HZO_TOOLS_COMMANDS_HPP

#include "hzo/io.hpp"
#include "hzo/optimizer.hpp"
#include "hzo/probe.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hzo::cli {

enum ExitCode : int {
  kSuccess = 0,
  kCheckFailure = 1,
  kConfigError = 2,
  kDivergence = 3,
  kNumericFailure = 4,
};

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  /// Primary output path; empty writes to the `out` stream instead.
  std::string out;
};

struct PlanOptions : CommonOptions {
  bool estimate = false;
};

struct CheckOptions {
  std::uint64_t seed = 20240601;
  bool negative_control = false;
  std::string out;
};

/// Output streams for results (`out`) and human-readable summaries (`log`).
struct Streams {
  std::ostream& out;
  std::ostream& log;
};

struct ProbeSchedule {
  Index every = 0;
  ProbeConfig<double> probe;
  std::vector<Block> blocks{Block::X, Block::Y};
};

/// A fully resolved experiment configuration.
struct Experiment {
  io::Json resolved;
  std::unique_ptr<FiniteSumObjective<double>> objective;
  std::optional<HybridPointd> initial_point;
  OptimizerConfig<double> optimizer;
  std::uint64_t seed = 0;
  ProbeSchedule schedule;
};

/// Parses an experiment config. Relative objective file paths resolve against
/// base_dir. Throws ConfigError.
Experiment parse_experiment(const io::Json& config, const std::string& base_dir,
                            std::optional<std::uint64_t> seed_override);

int cmd_run(const CommonOptions& opts, Streams io);
int cmd_sweep(const CommonOptions& opts, Streams io);
int cmd_probe(const CommonOptions& opts, Streams io);
int cmd_plan(const PlanOptions& opts, Streams io);
int cmd_check(const CheckOptions& opts, Streams io);

/// Full command-line entry point.
int run_cli(int argc, char** argv, Streams io);

}  // namespace hzo::cli

#endif  // HZO_TOOLS_COMMANDS_HPP
