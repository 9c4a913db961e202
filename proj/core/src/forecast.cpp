#include "vdp/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "vdp/error.hpp"
#include "vdp/stats.hpp"

namespace vdp {

VarModel var_fit(const Eigen::MatrixXd& train, int order) {
  const auto m = train.rows();
  const auto t = train.cols();
  if (order < 1) throw ContractError("VAR order must be at least 1");
  if (m < 1) throw ContractError("VAR training data has no components");
  if (t <= order * m + 1) {
    std::ostringstream os;
    os << "VAR(" << order << ") on " << m << " components needs more than "
       << order * m + 1 << " training samples, got " << t;
    throw ContractError(os.str());
  }
  if (!train.allFinite()) throw ContractError("VAR training data is not finite");

  const auto rows = t - order;
  const auto cols = order * m;
  Eigen::MatrixXd z(rows, cols);
  Eigen::MatrixXd y(rows, m);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto now = r + order;
    y.row(r) = train.col(now).transpose();
    for (int j = 1; j <= order; ++j) {
      z.block(r, (j - 1) * m, 1, m) = train.col(now - j).transpose();
    }
  }
  const Eigen::RowVectorXd z_mean = z.colwise().mean();
  const Eigen::RowVectorXd y_mean = y.colwise().mean();
  z.rowwise() -= z_mean;
  y.rowwise() -= y_mean;

  VarModel model;
  model.order = order;
  Eigen::MatrixXd coef;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  if (qr.rank() == cols) {
    coef = qr.solve(y);
  } else {
    model.ridge_fallback = true;
    Eigen::MatrixXd normal = z.transpose() * z;
    normal.diagonal().array() += kVarRidge;
    coef = normal.ldlt().solve(z.transpose() * y);
  }

  for (int j = 0; j < order; ++j) {
    model.lags.push_back(coef.middleRows(j * m, m).transpose());
  }
  model.intercept = (y_mean - z_mean * coef).transpose();
  return model;
}

Eigen::MatrixXd var_predict(const VarModel& model, const Eigen::MatrixXd& history,
                            int steps) {
  const int m = model.components();
  if (history.rows() != m || history.cols() != model.order) {
    std::ostringstream os;
    os << "VAR history must be " << m << "x" << model.order << ", got "
       << history.rows() << "x" << history.cols();
    throw ContractError(os.str());
  }
  if (steps < 0) throw ContractError("steps must be nonnegative");

  Eigen::MatrixXd window(m, model.order + steps);
  window.leftCols(model.order) = history;
  for (int s = 0; s < steps; ++s) {
    const int now = model.order + s;
    Eigen::VectorXd next = model.intercept;
    for (int j = 1; j <= model.order; ++j) {
      next.noalias() += model.lags[static_cast<std::size_t>(j - 1)] * window.col(now - j);
    }
    window.col(now) = next;
  }
  return window.rightCols(steps);
}

Eigen::MatrixXd vdp_predict(const FitResult& fit, int steps) {
  if (steps < 0) throw ContractError("steps must be nonnegative");
  const int m = fit.params.components();
  if (fit.states.length() < 1 || fit.states.components() != m) {
    throw ContractError("fit has no estimated states");
  }
  if (steps == 0) return Eigen::MatrixXd(m, 0);
  const State last = fit.states.state(fit.states.length() - 1);
  const Trajectory path = simulate(fit.params, last, steps + 1, fit.discretization());
  return path.x1.bottomRows(steps).transpose();
}

VarForecaster::VarForecaster(int order, bool refit_per_window)
    : order_(order), refit_(refit_per_window) {
  if (order < 1) throw ContractError("VAR order must be at least 1");
}

Eigen::MatrixXd VarForecaster::predict(const ForecastContext& ctx) {
  const Eigen::MatrixXd& series = *ctx.series;
  const Segment& seg = *ctx.bounds;
  if (ctx.window_start - order_ < 0) {
    throw ContractError("not enough history before the forecast window for VAR");
  }
  const Eigen::MatrixXd history =
      series.middleCols(ctx.window_start - order_, order_);
  if (refit_) {
    const VarModel model = var_fit(
        series.middleCols(seg.train.begin, ctx.window_start - seg.train.begin), order_);
    return var_predict(model, history, ctx.horizon);
  }
  if (cache_.size() <= static_cast<std::size_t>(ctx.segment)) {
    cache_.resize(static_cast<std::size_t>(ctx.segment) + 1);
  }
  auto& model = cache_[static_cast<std::size_t>(ctx.segment)];
  if (!model) model = var_fit(series.middleCols(seg.train.begin, seg.train.size()), order_);
  return var_predict(*model, history, ctx.horizon);
}

VdpForecaster::VdpForecaster(std::vector<FitResult> fits) : fits_(std::move(fits)) {}

Eigen::MatrixXd VdpForecaster::predict(const ForecastContext& ctx) {
  if (ctx.segment < 0 || static_cast<std::size_t>(ctx.segment) >= fits_.size()) {
    std::ostringstream os;
    os << "no VDP fit for segment " << ctx.segment << " (" << fits_.size()
       << " fits given)";
    throw ContractError(os.str());
  }
  if (ctx.window_start != ctx.bounds->train.end) {
    throw ContractError("VDP forecasts start right after the training range");
  }
  return vdp_predict(fits_[static_cast<std::size_t>(ctx.segment)], ctx.horizon);
}

Eigen::MatrixXd OracleForecaster::predict(const ForecastContext& ctx) {
  return ctx.series->middleCols(ctx.window_start, ctx.horizon);
}

Eigen::MatrixXd ConstantForecaster::predict(const ForecastContext& ctx) {
  return Eigen::MatrixXd::Constant(ctx.series->rows(), ctx.horizon, value_);
}

const MethodReport* ForecastReport::find(const std::string& name) const {
  for (const auto& m : methods) {
    if (m.method == name) return &m;
  }
  return nullptr;
}

std::vector<int> window_starts(const Segment& seg, const EvaluationOptions& opts,
                               int* skipped) {
  std::vector<int> starts;
  int dropped = 0;
  const int last = seg.test.end - opts.horizon;
  if (opts.protocol == Protocol::ShortTerm) {
    if (seg.test.begin <= last) {
      starts.push_back(seg.test.begin);
    } else {
      dropped = 1;
    }
  } else {
    for (int s = seg.test.begin; s <= last; s += opts.stride) starts.push_back(s);
    if (starts.empty()) dropped = 1;
  }
  if (skipped) *skipped = dropped;
  return starts;
}

namespace {

void summarize(MethodReport& rep, int m, int horizon) {
  // Pool samples by (component, h).
  std::vector<std::vector<double>> truth(static_cast<std::size_t>(m * horizon));
  std::vector<std::vector<double>> pred(truth.size());
  for (const auto& s : rep.samples) {
    const auto idx = static_cast<std::size_t>(s.component * horizon + s.h - 1);
    truth[idx].push_back(s.truth);
    pred[idx].push_back(s.prediction);
  }

  for (int h = 1; h <= horizon; ++h) {
    HorizonSummary sum;
    sum.h = h;
    std::vector<double> corrs;
    std::vector<double> rmses;
    for (int i = 0; i < m; ++i) {
      const auto idx = static_cast<std::size_t>(i * horizon + h - 1);
      ComponentHorizonMetric metric;
      metric.component = i;
      metric.h = h;
      metric.samples = static_cast<int>(truth[idx].size());
      if (metric.samples > 0) {
        const Eigen::Map<const Eigen::VectorXd> t(truth[idx].data(), metric.samples);
        const Eigen::Map<const Eigen::VectorXd> p(pred[idx].data(), metric.samples);
        metric.corr = stats::pearson(t, p);
        metric.rmse = stats::rmse(t, p);
        rmses.push_back(metric.rmse);
        if (metric.corr) {
          corrs.push_back(*metric.corr);
        } else {
          ++sum.corr_undefined;
        }
      }
      rep.per_component.push_back(metric);
    }
    sum.corr_count = static_cast<int>(corrs.size());
    if (!corrs.empty()) {
      sum.median_corr = stats::median(corrs);
      sum.se_corr = stats::sample_std(corrs) / std::sqrt(static_cast<double>(corrs.size()));
    }
    if (!rmses.empty()) {
      sum.median_rmse = stats::median(rmses);
      sum.se_rmse = stats::sample_std(rmses) / std::sqrt(static_cast<double>(rmses.size()));
    }
    rep.horizons.push_back(sum);
  }
}

}  // namespace

ForecastReport evaluate(const std::vector<Forecaster*>& methods,
                        const SegmentSplit& split, const Eigen::MatrixXd& series,
                        const EvaluationOptions& opts) {
  if (opts.horizon < 1) throw ContractError("horizon must be at least 1");
  if (opts.stride < 1) throw ContractError("stride must be at least 1");
  for (const auto& seg : split.segments) {
    if (seg.test.end > series.cols() || seg.train.begin < 0) {
      throw ContractError("segment extends beyond the series");
    }
  }
  const int m = static_cast<int>(series.rows());

  ForecastReport report;
  report.horizon = opts.horizon;
  report.stride = opts.stride;
  report.protocol = opts.protocol;

  for (Forecaster* method : methods) {
    MethodReport rep;
    rep.method = method->name();
    if (!method->supports(opts.protocol)) {
      rep.evaluated = false;
      report.methods.push_back(std::move(rep));
      continue;
    }
    for (int s = 0; s < static_cast<int>(split.segments.size()); ++s) {
      const Segment& seg = split.segments[static_cast<std::size_t>(s)];
      int skipped = 0;
      const auto starts = window_starts(seg, opts, &skipped);
      rep.skipped_windows += skipped;
      for (int w = 0; w < static_cast<int>(starts.size()); ++w) {
        const int ws = starts[static_cast<std::size_t>(w)];
        ForecastContext ctx{s, &seg, &series, ws, opts.horizon};
        const Eigen::MatrixXd pred = method->predict(ctx);
        if (pred.rows() != m || pred.cols() != opts.horizon) {
          throw ContractError("forecaster '" + rep.method +
                              "' returned a prediction of the wrong shape");
        }
        ++rep.windows;
        for (int i = 0; i < m; ++i) {
          for (int h = 1; h <= opts.horizon; ++h) {
            rep.samples.push_back(
                {s, i, w, h, series(i, ws + h - 1), pred(i, h - 1)});
          }
        }
      }
    }
    summarize(rep, m, opts.horizon);
    report.methods.push_back(std::move(rep));
  }
  return report;
}

namespace {

Eigen::VectorXd column_stds(const Eigen::MatrixXd& m) {
  Eigen::VectorXd out(m.cols());
  for (Eigen::Index i = 0; i < m.cols(); ++i) out(i) = stats::population_std(m.col(i));
  return out;
}

}  // namespace

Corpus export_simulations(const std::vector<FitResult>& fits,
                          const ExportOptions& opts) {
  if (fits.empty()) throw ContractError("no fits to export from");
  if (opts.n_series < 0) throw ContractError("n_series must be nonnegative");
  if (opts.length < 2) throw ContractError("series length must be at least 2");
  if (!(opts.noise_sigma >= 0.0)) throw ContractError("noise_sigma must be >= 0");
  if (opts.max_attempts < 1) throw ContractError("max_attempts must be positive");

  Corpus corpus;
  corpus.options = opts;
  const auto nfits = fits.size();

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int s = 0; s < opts.n_series; ++s) {
    const auto f = static_cast<std::size_t>(s) % nfits;
    const FitResult& fit = fits[f];
    const State base = fit.states.state(0);
    const Eigen::VectorXd sd1 = opts.noise_sigma * column_stds(fit.states.x1);
    const Eigen::VectorXd sd2 = opts.noise_sigma * column_stds(fit.states.x2);
    bool done = false;
    for (int attempt = 1; attempt <= opts.max_attempts && !done; ++attempt) {
      State s0 = base;
      for (int i = 0; i < s0.components(); ++i) {
        s0.x1(i) += sd1(i) * normal(rng);
        s0.x2(i) += sd2(i) * normal(rng);
      }
      try {
        const Trajectory path =
            simulate(fit.params, s0, opts.length, fit.discretization());
        corpus.simulated.push_back({static_cast<int>(f), attempt, path.x1});
        done = true;
      } catch (const DivergenceError&) {
      }
    }
    if (!done) ++corpus.skipped;
  }

  std::mt19937_64 noise_rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  for (int s = 0; s < opts.n_series; ++s) {
    const auto f = static_cast<std::size_t>(s) % nfits;
    const Eigen::MatrixXd& obs = fits[f].observations;
    if (obs.size() == 0) throw ContractError("fit carries no observations");
    const Eigen::VectorXd sd = opts.noise_sigma * column_stds(obs);
    Eigen::MatrixXd noisy = obs;
    for (Eigen::Index k = 0; k < noisy.rows(); ++k) {
      for (Eigen::Index i = 0; i < noisy.cols(); ++i) noisy(k, i) += sd(i) * normal(noise_rng);
    }
    corpus.noisy.push_back({static_cast<int>(f), 1, std::move(noisy)});
  }
  return corpus;
}

namespace {

std::string series_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "series_%05zu.csv", i);
  return buf;
}

void reset_series_dir(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("series_", 0) == 0 &&
        entry.path().extension() == ".csv") {
      std::filesystem::remove(entry.path());
    }
  }
}

}  // namespace

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  const auto sim_dir = dir / "simulated";
  const auto noisy_dir = dir / "noisy";
  reset_series_dir(sim_dir);
  reset_series_dir(noisy_dir);

  auto header = [](const Eigen::MatrixXd& x) {
    std::vector<std::string> h;
    for (Eigen::Index i = 0; i < x.cols(); ++i) h.push_back("x1_" + std::to_string(i));
    return h;
  };

  nlohmann::ordered_json manifest{
      {"schema_version", 1},
      {"seed", corpus.options.seed},
      {"n_series", corpus.options.n_series},
      {"length", corpus.options.length},
      {"noise_sigma", corpus.options.noise_sigma},
      {"skipped", corpus.skipped},
      {"simulated", nlohmann::ordered_json::array()},
      {"noisy", nlohmann::ordered_json::array()},
  };
  for (std::size_t i = 0; i < corpus.simulated.size(); ++i) {
    const auto& s = corpus.simulated[i];
    const auto name = series_name(i);
    save_csv(sim_dir / name, s.x1, header(s.x1));
    manifest["simulated"].push_back(
        {{"file", "simulated/" + name}, {"source_fit", s.source_fit}, {"attempts", s.attempts}});
  }
  for (std::size_t i = 0; i < corpus.noisy.size(); ++i) {
    const auto& s = corpus.noisy[i];
    const auto name = series_name(i);
    save_csv(noisy_dir / name, s.x1, header(s.x1));
    manifest["noisy"].push_back({{"file", "noisy/" + name}, {"source_fit", s.source_fit}});
  }
  std::ofstream(dir / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
}

}  // namespace vdp
