#include "vdp/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "vdp/data.hpp"
#include "vdp/error.hpp"

namespace vdp {

namespace {

Json matrix_rows(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_rows(const Json& j, const char* what) {
  if (!j.is_array()) throw ContractError(std::string(what) + " must be an array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.front().size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ContractError(std::string(what) + " is ragged");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      m(r, c) = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    }
  }
  return m;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json optional_number(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? Json(*v) : Json(nullptr);
}

double number_or_nan(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

Json params_to_json(const VdpParams& p) {
  return Json{{"alpha", matrix_rows(p.alpha)}, {"W", matrix_rows(p.coupling)}};
}

VdpParams params_from_json(const Json& j) {
  const Eigen::MatrixXd alpha = matrix_from_rows(j.at("alpha"), "alpha");
  if (alpha.cols() != 2) throw ContractError("alpha must have two columns");
  VdpParams p(alpha, matrix_from_rows(j.at("W"), "W"));
  p.validate();
  return p;
}

Json fit_to_json(const FitResult& fit, const Json& config_echo) {
  Json stats = Json::array();
  for (const auto& s : fit.stats) {
    stats.push_back({{"pearson", number_or_null(s.pearson)},
                     {"r_squared", number_or_null(s.r_squared)}});
  }
  Json history = Json::array();
  for (const auto& h : fit.objective_history) {
    history.push_back({{"stage", h.stage},
                       {"iteration", h.iteration},
                       {"lambda", h.lambda},
                       {"value", h.value}});
  }
  return Json{
      {"schema_version", kSchemaVersion},
      {"alpha", matrix_rows(fit.params.alpha)},
      {"W", matrix_rows(fit.params.coupling)},
      {"dt", fit.states.dt},
      {"substeps", fit.substeps},
      {"states", {{"x1", matrix_rows(fit.states.x1)}, {"x2", matrix_rows(fit.states.x2)}}},
      {"stats", std::move(stats)},
      {"objective_history", std::move(history)},
      {"fitness", optional_number(fit.fitness)},
      {"converged", fit.converged},
      {"reason", fit.reason},
      {"observations", matrix_rows(fit.observations)},
      {"config_echo", config_echo},
  };
}

FitResult fit_from_json(const Json& j) {
  if (j.value("schema_version", 0) != kSchemaVersion) {
    throw ContractError("unsupported fit schema version");
  }
  FitResult fit;
  fit.params = params_from_json(j);
  fit.states.x1 = matrix_from_rows(j.at("states").at("x1"), "states.x1");
  fit.states.x2 = matrix_from_rows(j.at("states").at("x2"), "states.x2");
  fit.states.dt = j.at("dt").get<double>();
  fit.substeps = j.at("substeps").get<int>();
  if (fit.states.x1.cols() != fit.params.components() ||
      fit.states.x2.rows() != fit.states.x1.rows() ||
      fit.states.x2.cols() != fit.states.x1.cols()) {
    throw ContractError("fit states do not match the parameters");
  }
  for (const auto& s : j.at("stats")) {
    fit.stats.push_back({number_or_nan(s.at("pearson")), number_or_nan(s.at("r_squared"))});
  }
  for (const auto& h : j.at("objective_history")) {
    fit.objective_history.push_back({h.at("stage").get<int>(), h.at("iteration").get<int>(),
                                     h.at("lambda").get<double>(), h.at("value").get<double>()});
  }
  if (!j.at("fitness").is_null()) fit.fitness = j.at("fitness").get<double>();
  fit.converged = j.at("converged").get<bool>();
  fit.reason = j.at("reason").get<std::string>();
  fit.observations = matrix_from_rows(j.at("observations"), "observations");
  return fit;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, 0, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, 0, path.string() + ": " + e.what());
  }
}

const char* protocol_name(Protocol p) {
  return p == Protocol::ShortTerm ? "short" : "long";
}

Json report_to_json(const ForecastReport& report) {
  Json methods = Json::array();
  for (const auto& m : report.methods) {
    Json horizons = Json::array();
    for (const auto& h : m.horizons) {
      horizons.push_back({{"h", h.h},
                          {"median_corr", optional_number(h.median_corr)},
                          {"se_corr", h.se_corr},
                          {"median_rmse", h.median_rmse},
                          {"se_rmse", h.se_rmse},
                          {"corr_count", h.corr_count},
                          {"corr_undefined", h.corr_undefined}});
    }
    methods.push_back({{"method", m.method},
                       {"evaluated", m.evaluated},
                       {"windows", m.windows},
                       {"skipped_windows", m.skipped_windows},
                       {"horizons", std::move(horizons)}});
  }
  return Json{{"schema_version", kSchemaVersion},
              {"protocol", protocol_name(report.protocol)},
              {"horizon", report.horizon},
              {"stride", report.stride},
              {"methods", std::move(methods)}};
}

void save_report_samples(const std::filesystem::path& path,
                         const ForecastReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "method,segment,component,window,h,truth,prediction,error\n";
  for (const auto& m : report.methods) {
    for (const auto& s : m.samples) {
      out << m.method << ',' << s.segment << ',' << s.component << ',' << s.window
          << ',' << s.h << ',' << format_double(s.truth) << ','
          << format_double(s.prediction) << ','
          << format_double(s.prediction - s.truth) << '\n';
    }
  }
}

void save_report_metrics(const std::filesystem::path& path,
                         const ForecastReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "method,component,h,corr,rmse,samples\n";
  for (const auto& m : report.methods) {
    for (const auto& c : m.per_component) {
      out << m.method << ',' << c.component << ',' << c.h << ','
          << (c.corr ? format_double(*c.corr) : std::string("NA")) << ','
          << format_double(c.rmse) << ',' << c.samples << '\n';
    }
  }
}

}  // namespace vdp
