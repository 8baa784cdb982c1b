// Objective instance files and CSV output.
//
// Objective files are JSON objects:
//
//   {
//     "kind": "block_quadratic" | "dense_quadratic" | "linear" | "cosh" | "logistic",
//     "d_x": 10, "d_y": 10, "n": 20,
//     "seed": 7,               // generate data from RngStream(seed, kObjectiveStream) ...
//     "centers": [[...], ...], // ... or give it explicitly: n rows of length d_x + d_y
//     ...kind-specific fields (see README)
//   }
//
// Generated and explicit data never mix: when the data field is present the
// seed is ignored.
#ifndef HZO_IO_HPP
#define HZO_IO_HPP

#include "hzo/objectives.hpp"
#include "hzo/optimizer.hpp"
#include "hzo/probe.hpp"

#include "json.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace hzo::io {

using Json = nlohmann::json;

/// Stream id reserved for objective data generation.
inline constexpr std::uint64_t kObjectiveStream = 0x0b1ec71fe;

/// Builds an objective from its JSON description. Throws ConfigError on
/// missing or malformed fields.
std::unique_ptr<FiniteSumObjective<double>> make_objective(const Json& spec);

/// Serializes an objective with explicit data arrays; make_objective of the
/// result reproduces it exactly.
Json objective_to_json(const FiniteSumObjective<double>& obj);

/// Parses a JSON file, mapping read and syntax failures to ConfigError.
Json read_json_file(const std::string& path);

/// %.17g formatting, with "inf", "-inf" and "nan" for non-finite values.
std::string format_real(double v);

inline constexpr const char* kTraceHeader = "epoch,step,f,grad_norm,grad_norm_x,grad_norm_y";
inline constexpr const char* kProbeHeader =
    "point_index,grad_norm,block,frob_raw,frob_scaled,op_lb,stderr,K,h";
inline constexpr const char* kSweepHeader = "eta_x,eta_y,final_f,diverged,steps_to_threshold";

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord<double>>& trace);

struct ProbeRow {
  Index point_index = 0;
  double grad_norm = 0;
  ProbeReport<double> report;
};

void write_probe_csv(std::ostream& out, const std::vector<ProbeRow>& rows);

}  // namespace hzo::io

#endif  // HZO_IO_HPP
