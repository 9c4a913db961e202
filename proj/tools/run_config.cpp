#include "run_config.hpp"

#include <set>

namespace vdpcli {

namespace {

using vdp::Json;

Json interval(const vdp::Interval& i) { return Json::array({i.lo, i.hi}); }

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw UsageError("config: '" + where() + "' must be an object");
  }

  template <typename T>
  T get(const std::string& key) {
    const Json& v = at(key);
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw UsageError("config: '" + name(key) + "' has the wrong type");
    }
  }

  double number(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number()) throw UsageError("config: '" + name(key) + "' must be a number");
    return v.get<double>();
  }

  int integer(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number_integer()) {
      throw UsageError("config: '" + name(key) + "' must be an integer");
    }
    return v.get<int>();
  }

  vdp::Interval range(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw UsageError("config: '" + name(key) + "' must be [lo, hi]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  Section section(const std::string& key) { return Section(at(key), name(key)); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw UsageError("config: unknown key '" + name(item.key()) + "'");
      }
    }
  }

 private:
  const Json& at(const std::string& key) {
    if (!j_.contains(key)) throw UsageError("config: missing key '" + name(key) + "'");
    seen_.insert(key);
    return j_.at(key);
  }
  std::string name(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

Json config_to_json(const RunConfig& cfg) {
  const auto& p = cfg.penalty;
  const auto& s = cfg.search;
  return Json{
      {"schema_version", vdp::kSchemaVersion},
      {"seed", cfg.seed},
      {"log_level", cfg.log_level},
      {"model", {{"dt", p.disc.dt}, {"substeps", p.disc.substeps}}},
      {"penalty",
       {{"lambda_schedule", p.lambda_schedule},
        {"inner_tol_first", p.inner_tol_first},
        {"inner_tol_last", p.inner_tol_last},
        {"inner_max_iter_first", p.inner_max_iter_first},
        {"inner_max_iter_last", p.inner_max_iter_last},
        {"outer_step", p.outer_step},
        {"outer_max_iter", p.outer_max_iter},
        {"bounds",
         {{"alpha1", interval(p.bounds.alpha1)},
          {"alpha2", interval(p.bounds.alpha2)},
          {"coupling", interval(p.bounds.coupling)}}}}},
      {"search",
       {{"gamma", s.gamma},
        {"step_scales",
         {{"alpha", s.step_scales.alpha},
          {"coupling", s.step_scales.coupling},
          {"x2", s.step_scales.x2}}},
        {"max_rounds", s.max_rounds},
        {"proposals_per_round", s.proposals_per_round},
        {"vp_every", s.vp_every},
        {"patience", s.patience},
        {"workers", s.workers}}},
      {"segments",
       {{"train_len", cfg.segments.train_len},
        {"test_len", cfg.segments.test_len},
        {"n_segments", cfg.segments.n_segments},
        {"offsets", cfg.segments.offsets}}},
      {"forecast",
       {{"horizon", cfg.forecast.horizon},
        {"var_order", cfg.forecast.var_order},
        {"stride", cfg.forecast.stride},
        {"var_refit_per_window", cfg.forecast.var_refit_per_window},
        {"methods", cfg.forecast.methods}}},
      {"export",
       {{"noise_sigma", cfg.export_.noise_sigma},
        {"max_attempts", cfg.export_.max_attempts}}},
  };
}

RunConfig config_from_json(const Json& j) {
  RunConfig cfg;
  Section root(j, "");
  if (root.integer("schema_version") != vdp::kSchemaVersion) {
    throw UsageError("config: unsupported schema_version");
  }
  cfg.seed = root.get<std::uint64_t>("seed");
  cfg.log_level = root.get<std::string>("log_level");
  if (cfg.log_level != "quiet" && cfg.log_level != "info" && cfg.log_level != "debug") {
    throw UsageError("config: 'log_level' must be quiet, info or debug");
  }

  auto model = root.section("model");
  cfg.penalty.disc.dt = model.number("dt");
  cfg.penalty.disc.substeps = model.integer("substeps");
  model.finish();

  auto pen = root.section("penalty");
  auto& p = cfg.penalty;
  p.lambda_schedule = pen.get<std::vector<double>>("lambda_schedule");
  p.inner_tol_first = pen.number("inner_tol_first");
  p.inner_tol_last = pen.number("inner_tol_last");
  p.inner_max_iter_first = pen.integer("inner_max_iter_first");
  p.inner_max_iter_last = pen.integer("inner_max_iter_last");
  p.outer_step = pen.number("outer_step");
  p.outer_max_iter = pen.integer("outer_max_iter");
  auto bounds = pen.section("bounds");
  p.bounds.alpha1 = bounds.range("alpha1");
  p.bounds.alpha2 = bounds.range("alpha2");
  p.bounds.coupling = bounds.range("coupling");
  bounds.finish();
  pen.finish();

  auto search = root.section("search");
  auto& s = cfg.search;
  s.gamma = search.number("gamma");
  auto scales = search.section("step_scales");
  s.step_scales.alpha = scales.number("alpha");
  s.step_scales.coupling = scales.number("coupling");
  s.step_scales.x2 = scales.number("x2");
  scales.finish();
  s.max_rounds = search.integer("max_rounds");
  s.proposals_per_round = search.integer("proposals_per_round");
  s.vp_every = search.integer("vp_every");
  s.patience = search.integer("patience");
  s.workers = search.integer("workers");
  search.finish();

  auto seg = root.section("segments");
  cfg.segments.train_len = seg.integer("train_len");
  cfg.segments.test_len = seg.integer("test_len");
  cfg.segments.n_segments = seg.integer("n_segments");
  cfg.segments.offsets = seg.get<std::vector<int>>("offsets");
  seg.finish();

  auto fc = root.section("forecast");
  cfg.forecast.horizon = fc.integer("horizon");
  cfg.forecast.var_order = fc.integer("var_order");
  cfg.forecast.stride = fc.integer("stride");
  cfg.forecast.var_refit_per_window = fc.get<bool>("var_refit_per_window");
  cfg.forecast.methods = fc.get<std::vector<std::string>>("methods");
  fc.finish();

  auto ex = root.section("export");
  cfg.export_.noise_sigma = ex.number("noise_sigma");
  cfg.export_.max_attempts = ex.integer("max_attempts");
  ex.finish();
  root.finish();

  try {
    cfg.penalty.validate();
    cfg.search.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  vdp::Json j;
  try {
    j = vdp::read_json(path);
  } catch (const std::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace vdpcli
