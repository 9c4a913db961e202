#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vdp/data.hpp"
#include "vdp/estimator.hpp"

namespace vdp {

/// x_t = intercept + sum_{j=1..k} A_j x_{t-j}
struct VarModel {
  int order = 6;
  std::vector<Eigen::MatrixXd> lags;  // A_1..A_k, each m x m
  Eigen::VectorXd intercept;
  /// True when the design was rank deficient and a ridge term was added.
  bool ridge_fallback = false;

  int components() const noexcept { return static_cast<int>(intercept.size()); }
};

inline constexpr double kVarRidge = 1e-8;

/// Joint least squares over all components on an m x T training block.
/// Lags are estimated on mean-removed regressors, so the intercept is exact
/// for constant series. Requires T > k*m + 1.
VarModel var_fit(const Eigen::MatrixXd& train, int order);

/// Recursive rollout. `history` is m x k with the most recent sample last.
Eigen::MatrixXd var_predict(const VarModel& model, const Eigen::MatrixXd& history,
                            int steps);

/// Integrates the fitted model from its final estimated state; returns the
/// m x steps block of x1 values after the last training sample.
Eigen::MatrixXd vdp_predict(const FitResult& fit, int steps);

enum class Protocol { ShortTerm, LongTerm };

struct ForecastContext {
  int segment = 0;
  const Segment* bounds = nullptr;
  const Eigen::MatrixXd* series = nullptr;  // m x T, full normalized series
  int window_start = 0;                     // first predicted index
  int horizon = 9;
};

class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string name() const = 0;
  virtual bool supports(Protocol) const { return true; }
  /// m x horizon prediction of series columns [window_start, window_start + H).
  virtual Eigen::MatrixXd predict(const ForecastContext& ctx) = 0;
};

/// VAR(k) trained on each segment's training range. History for a window is
/// the k samples before it; with refit_per_window the coefficients are
/// re-estimated on everything from the segment start up to the window.
class VarForecaster : public Forecaster {
 public:
  explicit VarForecaster(int order = 6, bool refit_per_window = false);
  std::string name() const override { return "var"; }
  Eigen::MatrixXd predict(const ForecastContext& ctx) override;

 private:
  int order_;
  bool refit_;
  std::vector<std::optional<VarModel>> cache_;
};

/// Forecasts from one fit per segment. Short-term protocol only: the hidden
/// state is only estimated up to the end of training.
class VdpForecaster : public Forecaster {
 public:
  explicit VdpForecaster(std::vector<FitResult> fits);
  std::string name() const override { return "vdp"; }
  bool supports(Protocol p) const override { return p == Protocol::ShortTerm; }
  Eigen::MatrixXd predict(const ForecastContext& ctx) override;

 private:
  std::vector<FitResult> fits_;
};

/// Returns the true continuation.
class OracleForecaster : public Forecaster {
 public:
  std::string name() const override { return "oracle"; }
  Eigen::MatrixXd predict(const ForecastContext& ctx) override;
};

/// Predicts a constant everywhere.
class ConstantForecaster : public Forecaster {
 public:
  explicit ConstantForecaster(double value = 0.0) : value_(value) {}
  std::string name() const override { return "constant"; }
  Eigen::MatrixXd predict(const ForecastContext& ctx) override;

 private:
  double value_;
};

struct EvaluationOptions {
  int horizon = 9;
  Protocol protocol = Protocol::ShortTerm;
  int stride = 1;
};

/// One predicted value.
struct ForecastSample {
  int segment = 0;
  int component = 0;
  int window = 0;  // index within the segment
  int h = 0;       // 1-based horizon step
  double truth = 0.0;
  double prediction = 0.0;
};

/// Metric for one component at one horizon step, pooled over every
/// (segment, window) forecast of that step.
struct ComponentHorizonMetric {
  int component = 0;
  int h = 0;
  std::optional<double> corr;  // undefined for zero-variance pools
  double rmse = 0.0;
  int samples = 0;
};

struct HorizonSummary {
  int h = 0;
  std::optional<double> median_corr;
  double se_corr = 0.0;  // sample std of per-component values / sqrt(n)
  double median_rmse = 0.0;
  double se_rmse = 0.0;
  int corr_count = 0;      // components contributing to the median
  int corr_undefined = 0;  // components excluded (zero variance)
};

struct MethodReport {
  std::string method;
  bool evaluated = true;  // false when the method does not support the protocol
  int windows = 0;
  int skipped_windows = 0;
  std::vector<HorizonSummary> horizons;
  std::vector<ComponentHorizonMetric> per_component;
  std::vector<ForecastSample> samples;
};

struct ForecastReport {
  int horizon = 9;
  int stride = 1;
  Protocol protocol = Protocol::ShortTerm;
  std::vector<MethodReport> methods;

  const MethodReport* find(const std::string& name) const;
};

/// Window start indices for one segment under the protocol. Windows that
/// would run past the test range are dropped and counted in `skipped`.
std::vector<int> window_starts(const Segment& seg, const EvaluationOptions& opts,
                               int* skipped = nullptr);

/// Runs every method over every window of every segment. At horizon step h,
/// correlation and RMSE are computed per component over the pooled h-step
/// forecasts of all segments and windows; the report then takes medians over
/// components.
ForecastReport evaluate(const std::vector<Forecaster*>& methods,
                        const SegmentSplit& split, const Eigen::MatrixXd& series,
                        const EvaluationOptions& opts = {});

struct ExportOptions {
  int n_series = 500;
  int length = 110;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
  int max_attempts = 10;
};

struct CorpusSeries {
  int source_fit = 0;
  int attempts = 1;
  Eigen::MatrixXd x1;  // length x m
};

struct Corpus {
  std::vector<CorpusSeries> simulated;
  std::vector<CorpusSeries> noisy;
  int skipped = 0;
  ExportOptions options;
};

/// Simulated corpus: fits drawn round-robin, initial state perturbed by
/// Gaussian noise with per-component sigma = noise_sigma * std of the fitted
/// track, simulated for `length` samples. Divergent draws are retried with a
/// fresh perturbation up to max_attempts, then skipped and counted.
/// Noisy corpus: each fit's observations plus Gaussian noise scaled the same
/// way. Deterministic for a fixed seed.
Corpus export_simulations(const std::vector<FitResult>& fits,
                          const ExportOptions& opts);

/// simulated/series_NNNNN.csv, noisy/series_NNNNN.csv and manifest.json.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus);

}  // namespace vdp
