#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "run_config.hpp"
#include "vdp/data.hpp"
#include "vdp/error.hpp"
#include "vdp/forecast.hpp"
#include "vdp/search.hpp"
#include "vdp/serialize.hpp"

#ifndef VDPFIT_VERSION
#define VDPFIT_VERSION "0.0.0"
#endif

namespace vdpcli {

namespace fs = std::filesystem;
using vdp::Json;

namespace {

const std::vector<std::string> kMethods{"vdp", "var", "oracle", "constant"};

fs::path output_path(const std::string& given, const std::string& fallback) {
  if (!given.empty()) return given;
  const char* root = std::getenv("VDPFIT_OUTPUT_ROOT");
  return fs::path(root && *root ? root : ".") / fallback;
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

Json echo(const std::string& command, Json inputs, const RunConfig* cfg) {
  Json j{{"schema_version", vdp::kSchemaVersion},
         {"tool", "vdpfit"},
         {"version", VDPFIT_VERSION},
         {"command", command},
         {"inputs", std::move(inputs)}};
  if (cfg) j["config"] = config_to_json(*cfg);
  return j;
}

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

vdp::FitResult load_fit(const std::string& path, Json* echo_out = nullptr) {
  const Json j = vdp::read_json(path);
  try {
    if (echo_out) *echo_out = j.value("config_echo", Json::object());
    return vdp::fit_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path + ": malformed fit document (" + e.what() + ")");
  } catch (const vdp::ContractError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

vdp::SegmentSplit segments_for(const RunConfig& cfg, int samples) {
  return vdp::split_segments(samples, cfg.segments.train_len, cfg.segments.test_len,
                             cfg.segments.n_segments, cfg.segments.offsets);
}

Json trace_line(const vdp::TraceRecord& r) {
  return Json{{"round", r.round},
              {"proposal", r.proposal},
              {"fitness", std::isfinite(r.fitness) ? Json(r.fitness) : Json(nullptr)},
              {"accepted", r.accepted}};
}

struct Globals {
  std::ostream* out = nullptr;
  bool quiet = false;
  std::ostream& log() {
    static std::ostringstream sink;
    if (quiet) {
      sink.str({});
      return sink;
    }
    return *out;
  }
};

// --- svd -----------------------------------------------------------------

struct SvdArgs {
  std::string input;
  int components = 0;
  std::string out;
  bool rows_are_time = false;
  std::string header = "auto";
  bool no_normalize = false;
};

int cmd_svd(const SvdArgs& a, Globals& g) {
  vdp::CsvLayout layout;
  layout.orientation =
      a.rows_are_time ? vdp::Orientation::RowsAreTime : vdp::Orientation::RowsAreSpace;
  layout.header = a.header == "yes"  ? vdp::HeaderMode::Present
                  : a.header == "no" ? vdp::HeaderMode::Absent
                                     : vdp::HeaderMode::Auto;
  const vdp::DataMatrix data = vdp::load_csv(a.input, layout);
  const int bound = static_cast<int>(std::min(data.values.rows(), data.values.cols()));
  if (a.components > bound) {
    std::ostringstream os;
    os << "--components " << a.components << " exceeds min(P, T) = " << bound
       << " for a " << data.values.rows() << " x " << data.values.cols() << " matrix";
    throw UsageError(os.str());
  }
  vdp::SvdComponents comps = vdp::svd_components(data, a.components);
  if (!a.no_normalize) comps = vdp::normalize_components(std::move(comps));

  const fs::path dir = output_path(a.out, "components");
  vdp::save_components(dir, comps);
  vdp::write_json(dir / "run.json",
                  echo("svd",
                       {{"input", a.input},
                        {"components", a.components},
                        {"rows_are_time", a.rows_are_time},
                        {"header", a.header},
                        {"normalize", !a.no_normalize}},
                       nullptr));
  g.log() << "wrote " << comps.components() << " components of length "
          << comps.samples() << " to " << dir.string() << '\n';
  return kExitOk;
}

// --- fit -------------------------------------------------------------------

struct FitArgs {
  std::string components;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int segment = -1;
  std::string trace;
  bool vp_only = false;
};

int cmd_fit(const FitArgs& a, Globals& g) {
  RunConfig cfg = config_or_default(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.vp_only) cfg.search.max_rounds = 0;
  cfg.search.seed = cfg.seed;
  g.quiet = cfg.log_level == "quiet";

  const vdp::SvdComponents comps = vdp::load_components(a.components);
  vdp::Range range{0, comps.samples()};
  if (a.segment >= 0) {
    const auto split = segments_for(cfg, comps.samples());
    if (a.segment >= static_cast<int>(split.segments.size())) {
      throw UsageError("--segment " + std::to_string(a.segment) + " out of range (" +
                       std::to_string(split.segments.size()) + " segments)");
    }
    range = split.segments[static_cast<std::size_t>(a.segment)].train;
  }
  vdp::ObservationSet z;
  z.values = comps.temporal.middleCols(range.begin, range.size()).transpose();

  std::ofstream trace;
  vdp::TraceSink sink;
  if (!a.trace.empty()) {
    ensure_parent(a.trace);
    trace.open(a.trace, std::ios::binary);
    if (!trace) throw std::runtime_error("cannot write " + a.trace);
    sink = [&trace](const vdp::TraceRecord& r) { trace << trace_line(r).dump() << '\n'; };
  }

  const vdp::SearchOutcome outcome = vdp::search_and_refine(z, cfg.search, cfg.penalty, sink);

  Json inputs{{"components", a.components},
              {"segment", a.segment},
              {"range", Json::array({range.begin, range.end})},
              {"vp_only", a.vp_only}};
  Json doc = vdp::fit_to_json(outcome.fit, echo("fit", std::move(inputs), &cfg));
  doc["search"] = {{"rounds", outcome.rounds},
                   {"invalid_proposals", outcome.invalid_proposals},
                   {"stop_reason", outcome.stop_reason},
                   {"best_fitness", outcome.best_fitness}};
  const fs::path out = output_path(a.out, "fit.json");
  ensure_parent(out);
  vdp::write_json(out, doc);

  auto& log = g.log();
  log << "fit: " << outcome.fit.reason << "; fitness "
      << (outcome.fit.fitness ? vdp::format_double(*outcome.fit.fitness) : "n/a") << '\n';
  for (std::size_t i = 0; i < outcome.fit.stats.size(); ++i) {
    log << "  component " << i << ": pearson "
        << vdp::format_double(outcome.fit.stats[i].pearson) << ", r2 "
        << vdp::format_double(outcome.fit.stats[i].r_squared) << '\n';
  }
  log << "wrote " << out.string() << '\n';
  return kExitOk;
}

// --- forecast --------------------------------------------------------------

struct ForecastArgs {
  std::string components;
  std::vector<std::string> fits;
  std::string config;
  std::string protocol = "short";
  std::string methods;
  std::string out;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

int cmd_forecast(const ForecastArgs& a, Globals& g) {
  RunConfig cfg = config_or_default(a.config);
  g.quiet = cfg.log_level == "quiet";
  if (!a.methods.empty()) cfg.forecast.methods = split_list(a.methods);
  for (const auto& m : cfg.forecast.methods) {
    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end()) {
      std::string avail;
      for (const auto& k : kMethods) avail += (avail.empty() ? "" : ", ") + k;
      throw UsageError("unknown method '" + m + "'; available: " + avail);
    }
  }
  if (cfg.forecast.methods.empty()) throw UsageError("no forecast methods selected");

  const vdp::SvdComponents comps = vdp::load_components(a.components);
  const vdp::SegmentSplit split = segments_for(cfg, comps.samples());
  vdp::EvaluationOptions opts;
  opts.horizon = cfg.forecast.horizon;
  opts.stride = cfg.forecast.stride;
  opts.protocol = a.protocol == "long" ? vdp::Protocol::LongTerm : vdp::Protocol::ShortTerm;

  std::vector<std::unique_ptr<vdp::Forecaster>> owned;
  const auto wants = [&](const std::string& m) {
    const auto& ms = cfg.forecast.methods;
    return std::find(ms.begin(), ms.end(), m) != ms.end();
  };
  for (const auto& m : cfg.forecast.methods) {
    if (m == "vdp") {
      const auto n = split.segments.size();
      if (a.fits.size() != n) {
        throw UsageError("method 'vdp' needs one --fit per segment (" + std::to_string(n) +
                         "), got " + std::to_string(a.fits.size()));
      }
      std::vector<std::optional<vdp::FitResult>> by_segment(n);
      for (const auto& path : a.fits) {
        Json fit_echo;
        vdp::FitResult fit = load_fit(path, &fit_echo);
        const int seg = fit_echo.value("inputs", Json::object()).value("segment", -1);
        if (seg < 0 || static_cast<std::size_t>(seg) >= n || by_segment[seg]) {
          throw UsageError(path + ": not a fit of a distinct segment 0.." +
                           std::to_string(n - 1) + " (use fit --segment)");
        }
        if (fit.states.length() != split.segments[seg].train.size() ||
            fit.params.components() != comps.components()) {
          throw UsageError(path + ": shape does not match segment " + std::to_string(seg));
        }
        by_segment[seg] = std::move(fit);
      }
      std::vector<vdp::FitResult> fits;
      for (auto& f : by_segment) fits.push_back(std::move(*f));
      owned.push_back(std::make_unique<vdp::VdpForecaster>(std::move(fits)));
    } else if (m == "var") {
      owned.push_back(std::make_unique<vdp::VarForecaster>(
          cfg.forecast.var_order, cfg.forecast.var_refit_per_window));
    } else if (m == "oracle") {
      owned.push_back(std::make_unique<vdp::OracleForecaster>());
    } else {
      owned.push_back(std::make_unique<vdp::ConstantForecaster>(0.0));
    }
  }
  if (!wants("vdp") && !a.fits.empty()) {
    g.log() << "note: --fit ignored without method 'vdp'\n";
  }

  std::vector<vdp::Forecaster*> methods;
  for (auto& f : owned) methods.push_back(f.get());
  const vdp::ForecastReport report = vdp::evaluate(methods, split, comps.temporal, opts);

  const fs::path dir = output_path(a.out, "forecast");
  fs::create_directories(dir);
  vdp::write_json(dir / "report.json", vdp::report_to_json(report));
  vdp::save_report_samples(dir / "samples.csv", report);
  vdp::save_report_metrics(dir / "metrics.csv", report);
  vdp::write_json(dir / "run.json",
                  echo("forecast",
                       {{"components", a.components},
                        {"fits", a.fits},
                        {"protocol", vdp::protocol_name(opts.protocol)}},
                       &cfg));

  auto& log = g.log();
  for (const auto& m : report.methods) {
    if (!m.evaluated) {
      log << m.method << ": not evaluated under the " << vdp::protocol_name(report.protocol)
          << " protocol\n";
      continue;
    }
    log << m.method << ": " << m.windows << " windows";
    if (m.skipped_windows) log << " (" << m.skipped_windows << " skipped)";
    log << "\n  h  median_corr  median_rmse\n";
    for (const auto& h : m.horizons) {
      log << "  " << h.h << "  "
          << (h.median_corr ? vdp::format_double(*h.median_corr) : std::string("NA")) << "  "
          << vdp::format_double(h.median_rmse) << '\n';
    }
  }
  log << "wrote " << dir.string() << '\n';
  return kExitOk;
}

// --- connectivity ----------------------------------------------------------

struct ConnectivityArgs {
  std::string components;
  std::vector<std::string> fits;
  int top_k = 200;
  std::string out;
};

int cmd_connectivity(const ConnectivityArgs& a, Globals& g) {
  if (a.top_k < 1) throw UsageError("--top-k must be at least 1");
  const vdp::SvdComponents comps = vdp::load_components(a.components);
  std::vector<Eigen::MatrixXd> couplings;
  for (const auto& path : a.fits) {
    const vdp::FitResult fit = load_fit(path);
    if (fit.params.components() != comps.components()) {
      throw UsageError(path + ": fit has m = " + std::to_string(fit.params.components()) +
                       " but the components directory has m = " +
                       std::to_string(comps.components()));
    }
    couplings.push_back(fit.params.coupling);
  }
  const vdp::EdgeList edges =
      vdp::connectivity_projection(comps.spatial, comps.singular_values, couplings, a.top_k);

  const fs::path out = output_path(a.out, "edges.csv");
  ensure_parent(out);
  vdp::save_edges(out, edges);
  fs::path run = out;
  run.replace_extension(".run.json");
  vdp::write_json(run, echo("connectivity",
                            {{"components", a.components}, {"fits", a.fits}, {"top_k", a.top_k}},
                            nullptr));
  g.log() << edges.excitatory.size() << " excitatory and " << edges.inhibitory.size()
          << " inhibitory edges written to " << out.string() << '\n';
  return kExitOk;
}

// --- export-sim ------------------------------------------------------------

struct ExportArgs {
  std::vector<std::string> fits;
  std::string config;
  int n = 500;
  int len = 110;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise_sigma;
  std::string out;
};

int cmd_export(const ExportArgs& a, Globals& g) {
  RunConfig cfg = config_or_default(a.config);
  g.quiet = cfg.log_level == "quiet";
  if (a.seed) cfg.seed = *a.seed;
  if (a.noise_sigma) cfg.export_.noise_sigma = *a.noise_sigma;

  std::vector<vdp::FitResult> fits;
  for (const auto& path : a.fits) fits.push_back(load_fit(path));

  vdp::ExportOptions opts;
  opts.n_series = a.n;
  opts.length = a.len;
  opts.noise_sigma = cfg.export_.noise_sigma;
  opts.seed = cfg.seed;
  opts.max_attempts = cfg.export_.max_attempts;
  const vdp::Corpus corpus = vdp::export_simulations(fits, opts);

  const fs::path dir = output_path(a.out, "corpus");
  vdp::write_corpus(dir, corpus);
  vdp::write_json(dir / "run.json",
                  echo("export-sim", {{"fits", a.fits}, {"n", a.n}, {"len", a.len}}, &cfg));
  g.log() << corpus.simulated.size() << " simulated and " << corpus.noisy.size()
          << " noisy series written to " << dir.string() << "; skipped " << corpus.skipped
          << '\n';
  return kExitOk;
}

// --- config ----------------------------------------------------------------

int cmd_config_dump(const std::string& out, std::ostream& os) {
  const std::string text = config_to_json(RunConfig{}).dump(2) + "\n";
  if (out.empty()) {
    os << text;
  } else {
    ensure_parent(out);
    std::ofstream(out, std::ios::binary) << text;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coupled van der Pol fitting and forecasting", "vdpfit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", VDPFIT_VERSION);
  Globals g{&out, false};

  SvdArgs svd;
  auto* c_svd = app.add_subcommand("svd", "Truncated SVD components of a P x T data matrix");
  c_svd->add_option("input", svd.input, "CSV data matrix")->required()->check(CLI::ExistingFile);
  c_svd->add_option("-m,--components", svd.components, "Number of components")
      ->required()
      ->check(CLI::PositiveNumber);
  c_svd->add_option("--out", svd.out, "Output directory");
  c_svd->add_flag("--rows-are-time", svd.rows_are_time, "Input rows are time samples");
  c_svd->add_option("--header", svd.header, "Header row handling")
      ->check(CLI::IsMember({"auto", "yes", "no"}));
  c_svd->add_flag("--no-normalize", svd.no_normalize, "Skip mean-of-std normalization");

  FitArgs fit;
  std::uint64_t fit_seed = 0;
  auto* c_fit = app.add_subcommand("fit", "Stochastic search plus variable-projection fit");
  c_fit->add_option("components", fit.components, "Components directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  c_fit->add_option("--config", fit.config, "Run configuration (JSON)")
      ->check(CLI::ExistingFile);
  auto* o_fit_seed = c_fit->add_option("--seed", fit_seed, "RNG seed (overrides config)");
  c_fit->add_option("--out", fit.out, "Output fit JSON");
  c_fit->add_option("--segment", fit.segment, "Fit only this segment's training range")
      ->check(CLI::NonNegativeNumber);
  c_fit->add_option("--trace", fit.trace, "Write the search trace as JSON lines");
  c_fit->add_flag("--vp-only", fit.vp_only, "Skip stochastic search");

  ForecastArgs fc;
  auto* c_fc = app.add_subcommand("forecast", "Sliding-window forecast evaluation");
  c_fc->add_option("components", fc.components, "Components directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  c_fc->add_option("--fit", fc.fits, "Fit JSON, one per segment")->check(CLI::ExistingFile);
  c_fc->add_option("--config", fc.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  c_fc->add_option("--protocol", fc.protocol, "short or long")
      ->check(CLI::IsMember({"short", "long"}));
  c_fc->add_option("--methods", fc.methods, "Comma-separated methods (vdp,var,oracle,constant)");
  c_fc->add_option("--out", fc.out, "Output directory");

  ConnectivityArgs conn;
  auto* c_conn = app.add_subcommand("connectivity", "Pixel-level edges from summed couplings");
  c_conn->add_option("components", conn.components, "Components directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  c_conn->add_option("--fit", conn.fits, "Fit JSON (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  c_conn->add_option("--top-k", conn.top_k, "Edges kept per polarity");
  c_conn->add_option("--out", conn.out, "Output edge CSV");

  ExportArgs ex;
  std::uint64_t ex_seed = 0;
  double ex_sigma = 0.0;
  auto* c_ex = app.add_subcommand("export-sim", "Simulated and noisy corpora for pretraining");
  c_ex->add_option("--fit", ex.fits, "Fit JSON (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  c_ex->add_option("--config", ex.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  c_ex->add_option("--n", ex.n, "Number of simulated series")->check(CLI::NonNegativeNumber);
  c_ex->add_option("--len", ex.len, "Samples per series")->check(CLI::Range(2, 1 << 24));
  auto* o_ex_seed = c_ex->add_option("--seed", ex_seed, "RNG seed (overrides config)");
  auto* o_ex_sigma =
      c_ex->add_option("--noise-sigma", ex_sigma, "Noise scale (overrides config)");
  c_ex->add_option("--out", ex.out, "Output directory");

  std::string dump_out;
  bool dump = false;
  auto* c_cfg = app.add_subcommand("config", "Configuration utilities");
  c_cfg->add_flag("--dump", dump, "Write the default configuration")->required();
  c_cfg->add_option("--out", dump_out, "Destination file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_svd->parsed()) return cmd_svd(svd, g);
    if (c_fit->parsed()) {
      if (*o_fit_seed) fit.seed = fit_seed;
      return cmd_fit(fit, g);
    }
    if (c_fc->parsed()) return cmd_forecast(fc, g);
    if (c_conn->parsed()) return cmd_connectivity(conn, g);
    if (c_ex->parsed()) {
      if (*o_ex_seed) ex.seed = ex_seed;
      if (*o_ex_sigma) ex.noise_sigma = ex_sigma;
      return cmd_export(ex, g);
    }
    if (c_cfg->parsed()) return cmd_config_dump(dump_out, out);
  } catch (const UsageError& e) {
    err << "vdpfit: " << e.what() << '\n';
    return kExitUsage;
  } catch (const vdp::ContractError& e) {
    err << "vdpfit: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "vdpfit: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace vdpcli
