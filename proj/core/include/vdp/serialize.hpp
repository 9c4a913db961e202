#pragma once

#include <filesystem>

#include "json.hpp"
#include "vdp/estimator.hpp"
#include "vdp/forecast.hpp"

namespace vdp {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

Json params_to_json(const VdpParams& p);
VdpParams params_from_json(const Json& j);

/// {"schema_version", "alpha", "W", "dt", "substeps", "states": {"x1", "x2"},
///  "stats", "objective_history", "fitness", "converged", "reason",
///  "observations", "config_echo"}. States and observations are N x m
/// row arrays.
Json fit_to_json(const FitResult& fit, const Json& config_echo = Json::object());
FitResult fit_from_json(const Json& j);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

const char* protocol_name(Protocol p);

Json report_to_json(const ForecastReport& report);

/// Per-sample tidy CSV: method,segment,component,window,h,truth,prediction,error
void save_report_samples(const std::filesystem::path& path,
                         const ForecastReport& report);
/// Per (method, component, h) pooled metrics:
/// method,component,h,corr,rmse,samples
void save_report_metrics(const std::filesystem::path& path,
                         const ForecastReport& report);

}  // namespace vdp
