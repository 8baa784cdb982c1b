#include "hzo/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace hzo::io {

namespace {

template <typename T>
T required(const Json& spec, const char* key) {
  if (!spec.contains(key)) {
    throw ConfigError(std::string("objective: missing field '") + key + "'");
  }
  try {
    return spec.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("objective: field '") + key + "': " + e.what());
  }
}

template <typename T>
T optional_field(const Json& spec, const char* key, T fallback) {
  if (!spec.contains(key)) {
    return fallback;
  }
  try {
    return spec.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("objective: field '") + key + "': " + e.what());
  }
}

/// Rows of the JSON array become columns of the matrix (one sample per column).
MatrixX<double> columns_from_rows(const Json& spec, const char* key, Index rows, Index cols) {
  const auto data = required<std::vector<std::vector<double>>>(spec, key);
  if (static_cast<Index>(data.size()) != cols) {
    throw ConfigError(std::string("objective: '") + key + "' needs " + std::to_string(cols) +
                      " rows, got " + std::to_string(data.size()));
  }
  MatrixX<double> m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    const auto& row = data[static_cast<std::size_t>(c)];
    if (static_cast<Index>(row.size()) != rows) {
      throw ConfigError(std::string("objective: '") + key + "' row " + std::to_string(c) +
                        " has length " + std::to_string(row.size()) + ", expected " +
                        std::to_string(rows));
    }
    for (Index r = 0; r < rows; ++r) {
      m(r, c) = row[static_cast<std::size_t>(r)];
    }
  }
  return m;
}

Json rows_from_columns(const MatrixX<double>& m) {
  Json rows = Json::array();
  for (Index c = 0; c < m.cols(); ++c) {
    std::vector<double> row(m.col(c).data(), m.col(c).data() + m.rows());
    rows.push_back(row);
  }
  return rows;
}

VectorX<double> vector_field(const Json& spec, const char* key, Index size) {
  const auto data = required<std::vector<double>>(spec, key);
  if (static_cast<Index>(data.size()) != size) {
    throw ConfigError(std::string("objective: '") + key + "' needs " + std::to_string(size) +
                      " entries");
  }
  return Eigen::Map<const VectorX<double>>(data.data(), size);
}

}  // namespace

std::unique_ptr<FiniteSumObjective<double>> make_objective(const Json& spec) {
  if (!spec.is_object()) {
    throw ConfigError("objective: expected a JSON object");
  }
  const auto kind = required<std::string>(spec, "kind");
  const auto d_x = required<Index>(spec, "d_x");
  const auto d_y = required<Index>(spec, "d_y");
  const auto n = required<Index>(spec, "n");
  if (n < 1) {
    throw ConfigError("objective: n must be >= 1");
  }
  if (d_x < 1 || d_y < 1) {
    throw ConfigError("objective: d_x and d_y must be >= 1");
  }
  const BlockLayout layout(d_x, d_y);
  const Index d = layout.dim();

  const auto data_or_seed = [&](const char* key) {
    if (!spec.contains(key) && !spec.contains("seed")) {
      throw ConfigError(std::string("objective '") + kind + "': give either '" + key +
                        "' or 'seed'");
    }
    return spec.contains(key);
  };
  RngStream rng(optional_field<std::uint64_t>(spec, "seed", 0), kObjectiveStream);

  try {
    if (kind == "block_quadratic") {
      const auto a_x = required<double>(spec, "a_x");
      const auto a_y = required<double>(spec, "a_y");
      if (data_or_seed("centers")) {
        return std::make_unique<BlockQuadratic<double>>(
            layout, columns_from_rows(spec, "centers", d, n), a_x, a_y);
      }
      return std::make_unique<BlockQuadratic<double>>(make_block_quadratic<double>(
          layout, n, a_x, a_y, optional_field(spec, "center_scale", 1.0), rng));
    }
    if (kind == "dense_quadratic") {
      if (spec.contains("hessian")) {
        const MatrixX<double> h = columns_from_rows(spec, "hessian", d, d);
        MatrixX<double> centers = spec.contains("centers")
                                      ? columns_from_rows(spec, "centers", d, n)
                                      : gaussian_columns<double>(
                                            rng, d, n, optional_field(spec, "center_scale", 1.0));
        return std::make_unique<DenseQuadratic<double>>(layout, h, std::move(centers));
      }
      if (!spec.contains("seed")) {
        throw ConfigError("objective 'dense_quadratic': give either 'hessian' or 'seed'");
      }
      return std::make_unique<DenseQuadratic<double>>(make_dense_quadratic<double>(
          layout, n, optional_field(spec, "center_scale", 1.0), rng));
    }
    if (kind == "linear") {
      if (data_or_seed("slopes")) {
        const MatrixX<double> slopes = columns_from_rows(spec, "slopes", d, n);
        const VectorX<double> offsets = spec.contains("offsets")
                                            ? vector_field(spec, "offsets", n)
                                            : VectorX<double>::Zero(n);
        return std::make_unique<LinearObjective<double>>(layout, slopes, offsets);
      }
      return std::make_unique<LinearObjective<double>>(
          make_linear<double>(layout, n, optional_field(spec, "slope_scale", 1.0), rng));
    }
    if (kind == "cosh") {
      if (data_or_seed("shifts")) {
        return std::make_unique<CoshObjective<double>>(layout,
                                                       columns_from_rows(spec, "shifts", d, n));
      }
      return std::make_unique<CoshObjective<double>>(
          make_cosh<double>(layout, n, optional_field(spec, "shift_scale", 1.0), rng));
    }
    if (kind == "logistic") {
      const double lambda = optional_field(spec, "lambda", 0.0);
      if (data_or_seed("features")) {
        return std::make_unique<LogisticObjective<double>>(
            layout, columns_from_rows(spec, "features", d, n), vector_field(spec, "labels", n),
            lambda);
      }
      return std::make_unique<LogisticObjective<double>>(make_logistic<double>(
          layout, n, optional_field(spec, "feature_scale", 1.0), lambda, rng));
    }
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("objective: ") + e.what());
  } catch (const NumericError& e) {
    throw ConfigError(std::string("objective: ") + e.what());
  }
  throw ConfigError("objective: unknown kind '" + kind + "'");
}

Json objective_to_json(const FiniteSumObjective<double>& obj) {
  Json j;
  j["kind"] = std::string(obj.kind());
  j["d_x"] = obj.layout().d_x();
  j["d_y"] = obj.layout().d_y();
  j["n"] = obj.num_samples();
  if (const auto* q = dynamic_cast<const BlockQuadratic<double>*>(&obj)) {
    j["a_x"] = q->a_x();
    j["a_y"] = q->a_y();
    j["centers"] = rows_from_columns(q->centers());
  } else if (const auto* dq = dynamic_cast<const DenseQuadratic<double>*>(&obj)) {
    j["hessian"] = rows_from_columns(dq->hessian());
    j["centers"] = rows_from_columns(dq->centers());
  } else if (const auto* lin = dynamic_cast<const LinearObjective<double>*>(&obj)) {
    j["slopes"] = rows_from_columns(lin->slopes());
    j["offsets"] = std::vector<double>(lin->offsets().data(),
                                       lin->offsets().data() + lin->offsets().size());
  } else if (const auto* c = dynamic_cast<const CoshObjective<double>*>(&obj)) {
    j["shifts"] = rows_from_columns(c->shifts());
  } else if (const auto* lg = dynamic_cast<const LogisticObjective<double>*>(&obj)) {
    j["features"] = rows_from_columns(lg->features());
    j["labels"] = std::vector<double>(lg->labels().data(),
                                      lg->labels().data() + lg->labels().size());
    j["lambda"] = lg->lambda();
  } else {
    throw ConfigError("objective_to_json: unsupported objective kind '" +
                      std::string(obj.kind()) + "'");
  }
  return j;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open '" + path + "'");
  }
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

std::string format_real(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord<double>>& trace) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace) {
    out << r.epoch << ',' << r.step << ',' << format_real(r.f_value) << ','
        << format_real(r.grad_norm) << ',' << format_real(r.grad_norm_x) << ','
        << format_real(r.grad_norm_y) << '\n';
  }
}

void write_probe_csv(std::ostream& out, const std::vector<ProbeRow>& rows) {
  out << kProbeHeader << '\n';
  for (const auto& row : rows) {
    const auto& r = row.report;
    out << row.point_index << ',' << format_real(row.grad_norm) << ',' << to_string(r.block)
        << ',' << format_real(r.frobenius_raw) << ',' << format_real(r.frobenius_scaled) << ','
        << format_real(r.operator_lb) << ',' << format_real(r.standard_error) << ','
        << r.directions << ',' << format_real(r.h) << '\n';
  }
}

}  // namespace hzo::io
