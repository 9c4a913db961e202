#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "vdp/error.hpp"
#include "vdp/serialize.hpp"

using namespace vdp;
using vdp::testing::TempDir;

namespace {

FitResult sample_fit() {
  std::mt19937_64 rng(1);
  FitResult f;
  f.params = vdp::testing::random_params(rng, 2);
  f.states = simulate(f.params, vdp::testing::random_state(rng, 2, -0.5, 0.5), 12,
                      Discretization{0.05, 3});
  f.substeps = 3;
  f.objective_history = {{0, 0, 10.0, 3.5}, {0, 1, 10.0, 2.25}, {1, 0, 100.0, 1.0 / 3.0}};
  f.stats = {{0.9, 0.81}, {0.7, 0.49}};
  f.fitness = 1.25;
  f.converged = true;
  f.reason = "gradient tolerance";
  f.observations = f.states.x1;
  return f;
}

}  // namespace

TEST(Serialize, FitRoundTripIsExact) {
  const FitResult f = sample_fit();
  TempDir dir;
  Json echo = {{"seed", 7}};
  write_json(dir / "fit.json", fit_to_json(f, echo));
  const Json j = read_json(dir / "fit.json");
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(j.at("config_echo").at("seed"), 7);

  const FitResult g = fit_from_json(j);
  EXPECT_EQ(g.params.alpha, f.params.alpha);
  EXPECT_EQ(g.params.coupling, f.params.coupling);
  EXPECT_EQ(g.states.x1, f.states.x1);
  EXPECT_EQ(g.states.x2, f.states.x2);
  EXPECT_EQ(g.states.dt, f.states.dt);
  EXPECT_EQ(g.substeps, 3);
  ASSERT_EQ(g.objective_history.size(), 3u);
  EXPECT_EQ(g.objective_history[2].value, 1.0 / 3.0);
  EXPECT_EQ(g.objective_history[2].stage, 1);
  EXPECT_EQ(g.stats[1].r_squared, 0.49);
  EXPECT_EQ(g.fitness, f.fitness);
  EXPECT_TRUE(g.converged);
  EXPECT_EQ(g.reason, f.reason);
  EXPECT_EQ(g.observations, f.observations);

  // Serializing the reloaded fit gives the same document.
  EXPECT_EQ(fit_to_json(g, echo).dump(), j.dump());
}

TEST(Serialize, NonFiniteStatsBecomeNull) {
  FitResult f = sample_fit();
  f.stats[0].r_squared = std::numeric_limits<double>::quiet_NaN();
  f.fitness.reset();
  const Json j = fit_to_json(f);
  EXPECT_TRUE(j.at("stats")[0].at("r_squared").is_null());
  EXPECT_TRUE(j.at("fitness").is_null());
  const FitResult g = fit_from_json(j);
  EXPECT_TRUE(std::isnan(g.stats[0].r_squared));
  EXPECT_FALSE(g.fitness.has_value());
}

TEST(Serialize, ParamsRoundTrip) {
  std::mt19937_64 rng(2);
  const VdpParams p = vdp::testing::random_params(rng, 3);
  const VdpParams q = params_from_json(params_to_json(p));
  EXPECT_EQ(q.flatten(), p.flatten());
}

TEST(Serialize, MissingKeyAndMalformedFile) {
  Json j = fit_to_json(sample_fit());
  j.erase("states");
  EXPECT_ANY_THROW(fit_from_json(j));

  TempDir dir;
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(read_json(dir / "bad.json"), ParseError);
}

TEST(Serialize, MetricsCsvMarksUndefinedCorrelation) {
  ForecastReport rep;
  MethodReport m;
  m.method = "constant";
  m.per_component.push_back({0, 1, std::nullopt, 0.5, 4});
  m.per_component.push_back({1, 1, 0.25, 1.5, 4});
  rep.methods.push_back(m);
  TempDir dir;
  save_report_metrics(dir / "metrics.csv", rep);
  EXPECT_EQ(vdp::testing::read_file(dir / "metrics.csv"),
            "method,component,h,corr,rmse,samples\n"
            "constant,0,1,NA,0.5,4\n"
            "constant,1,1,0.25,1.5,4\n");
}
