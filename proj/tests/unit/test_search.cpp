#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vdp/search.hpp"

using namespace vdp;

namespace {

ObservationSet two_component_data(std::uint64_t seed, int n = 80) {
  VdpParams p = VdpParams::zeros(2);
  p.alpha << 1.5, 1.0, 1.5, 1.0;
  p.coupling << 0, 0.3, -0.3, 0;
  const State s0(Eigen::Vector2d(1.0, -0.5), Eigen::Vector2d(0.5, 0.2));
  return ObservationSet{vdp::testing::add_noise(simulate(p, s0, n, 0.1).x1, 0.05, seed)};
}

SearchConfig small_search(std::uint64_t seed) {
  SearchConfig cfg;
  cfg.max_rounds = 6;
  cfg.proposals_per_round = 12;
  cfg.vp_every = 3;
  cfg.patience = 6;
  cfg.seed = seed;
  return cfg;
}

PenaltyConfig quick_vp() {
  PenaltyConfig cfg;
  cfg.disc = {0.1, 1};
  cfg.outer_max_iter = 10;
  return cfg;
}

}  // namespace

TEST(Fitness, PerfectReproductionScoresTwo) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd z = vdp::testing::uniform_matrix(rng, 30, 3, -1, 1);
  const FitnessResult f = fitness(ObservationSet{z}, z, 1.0);
  EXPECT_NEAR(f.value, 2.0, 1e-12);
  EXPECT_TRUE(f.valid());
}

TEST(Fitness, MinimumOverComponents) {
  // Component 0: sim = z, so c = 1 and R2 = 1. Component 1: sim = z / 2.
  Eigen::MatrixXd z(4, 2), sim(4, 2);
  z << 1, 1, 2, -1, 3, 1, 4, -1;
  sim << 1, 0.5, 2, -0.5, 3, 0.5, 4, -0.5;
  // Column 1 has mean 0, SS_tot = 4, SS_res = 4 * 0.25 = 1, so R2 = 0.75.
  const FitnessResult f = fitness(ObservationSet{z}, sim, 1.0);
  EXPECT_NEAR(f.r_squared[1], 0.75, 1e-15);
  EXPECT_NEAR(f.pearson[1], 1.0, 1e-15);
  EXPECT_NEAR(f.value, 1.75, 1e-15);
}

TEST(Fitness, HandArithmeticForMixedComponents) {
  // c = (0.9, 0.5), R2 = (0.8, 0.2), gamma = 1 -> min(1.7, 0.7)
  const double c[] = {0.9, 0.5}, r2[] = {0.8, 0.2};
  double best = INFINITY;
  for (int i = 0; i < 2; ++i) best = std::min(best, c[i] + 1.0 * r2[i]);
  EXPECT_DOUBLE_EQ(best, 0.7);

  // The same rule through the library on constructed tracks.
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd z = vdp::testing::uniform_matrix(rng, 50, 2, -1, 1);
  Eigen::MatrixXd sim = z;
  sim.col(1) = -z.col(1);
  const FitnessResult f = fitness(ObservationSet{z}, sim, 1.0);
  EXPECT_NEAR(f.value, std::min(f.pearson[0] + f.r_squared[0], f.pearson[1] + f.r_squared[1]),
              1e-15);
}

TEST(Fitness, GammaZeroIgnoresDetermination) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd z = vdp::testing::uniform_matrix(rng, 40, 2, -1, 1);
  const Eigen::MatrixXd sim = 3.0 * z.array() + 5.0;  // c = 1, R2 very negative
  const FitnessResult f = fitness(ObservationSet{z}, sim, 0.0);
  EXPECT_NEAR(f.value, 1.0, 1e-12);
}

TEST(Fitness, ZeroVarianceTrackIsRejected) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd z = vdp::testing::uniform_matrix(rng, 20, 3, -1, 1);
  Eigen::MatrixXd sim = z;
  sim.col(2).setConstant(0.3);
  const FitnessResult f = fitness(ObservationSet{z}, sim, 1.0);
  EXPECT_EQ(f.value, -INFINITY);
  ASSERT_TRUE(f.invalid_component.has_value());
  EXPECT_EQ(*f.invalid_component, 2);
}

TEST(Fitness, InvariantUnderComponentPermutation) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd z = vdp::testing::uniform_matrix(rng, 30, 3, -1, 1);
  const Eigen::MatrixXd sim = z + 0.3 * vdp::testing::uniform_matrix(rng, 30, 3, -1, 1);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
  perm.indices() << 2, 0, 1;
  const double a = fitness(ObservationSet{z}, sim, 0.7).value;
  const double b = fitness(ObservationSet{z * perm}, sim * perm, 0.7).value;
  EXPECT_DOUBLE_EQ(a, b);
}

TEST(Propose, TinyScalesLeaveCandidateUnchanged) {
  const ObservationSet z = two_component_data(1);
  Candidate c;
  c.params = VdpParams::zeros(2);
  c.params.alpha << 1, 0.5, 1, 0.5;
  c.x2_init = Eigen::Vector2d(0.1, -0.1);
  const Discretization d{0.1, 1};
  score(c, z, 1.0, d);

  SearchConfig cfg;
  cfg.step_scales = {1e-300, 1e-300, 1e-300};
  std::mt19937_64 rng(7);
  const ParameterBounds bounds = ParameterBounds::defaults(2);
  for (int i = 0; i < 10; ++i) {
    const Candidate p = propose(c, cfg, bounds, z, d, rng);
    EXPECT_LT((p.params.flatten() - c.params.flatten()).cwiseAbs().maxCoeff(), 1e-290);
    EXPECT_LT((p.x2_init - c.x2_init).cwiseAbs().maxCoeff(), 1e-290);
    EXPECT_EQ(p.fitness, c.fitness);
  }
}

TEST(Propose, ClipsToBounds) {
  Candidate c;
  c.params = VdpParams::zeros(2);
  c.params.alpha << 4.9, 4.9, 4.9, 4.9;
  c.x2_init = Eigen::Vector2d::Zero();
  const ParameterBounds bounds = ParameterBounds::defaults(2);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const Candidate p = perturb(c, {5.0, 5.0, 5.0}, bounds, rng);
    EXPECT_TRUE(bounds.contains(p.params.flatten()));
  }
}

TEST(Propose, PerturbsOneGroupAtATime) {
  Candidate c;
  c.params = VdpParams::zeros(3);
  c.params.alpha.setConstant(1.0);
  c.x2_init = Eigen::Vector3d::Zero();
  std::mt19937_64 rng(9);
  const ParameterBounds bounds = ParameterBounds::defaults(3);
  for (int i = 0; i < 100; ++i) {
    const Candidate p = perturb(c, {0.2, 0.1, 0.5}, bounds, rng);
    const int alpha_rows = ((p.params.alpha - c.params.alpha).rowwise().norm().array() > 0).count();
    const int w_entries = ((p.params.coupling - c.params.coupling).array() != 0).count();
    const int x2_entries = ((p.x2_init - c.x2_init).array() != 0).count();
    EXPECT_EQ((alpha_rows > 0) + (w_entries > 0) + (x2_entries > 0), 1);
    EXPECT_LE(alpha_rows, 1);
    EXPECT_LE(w_entries, 1);
    EXPECT_LE(x2_entries, 1);
  }
}

TEST(Propose, DivergentCandidateIsInvalid) {
  Candidate c;
  c.params = VdpParams::zeros(1);
  c.params.coupling << 50.0;
  c.x2_init = Eigen::VectorXd::Zero(1);
  ObservationSet z{Eigen::MatrixXd::Ones(50, 1)};
  z.values(0, 0) = 2.0;
  score(c, z, 1.0, Discretization{1.0, 1});
  EXPECT_FALSE(c.valid);
  EXPECT_EQ(c.fitness, -INFINITY);
}

TEST(Search, GreedyAcceptanceAndMonotoneBest) {
  const ObservationSet z = two_component_data(2);
  const SearchOutcome out = search_and_refine(z, small_search(42), quick_vp());
  ASSERT_FALSE(out.best_fitness.empty());
  for (std::size_t i = 1; i < out.best_fitness.size(); ++i) {
    EXPECT_GE(out.best_fitness[i], out.best_fitness[i - 1]);
  }
  // A proposal is accepted only if it beats everything accepted before it.
  double best = out.best_fitness.front();
  for (const auto& r : out.trace) {
    if (r.accepted) {
      EXPECT_TRUE(r.valid);
      EXPECT_GT(r.fitness, best);
      best = r.fitness;
    } else {
      EXPECT_TRUE(!r.valid || r.fitness <= best);
    }
  }
  EXPECT_DOUBLE_EQ(best, out.best.fitness);
  EXPECT_TRUE(ParameterBounds::defaults(2).contains(out.fit.params.flatten()));
}

TEST(Search, SeedReproducibleRegardlessOfWorkers) {
  const ObservationSet z = two_component_data(3);
  SearchConfig a = small_search(42);
  a.workers = 1;
  SearchConfig b = small_search(42);
  b.workers = 4;
  const SearchOutcome ra = search_and_refine(z, a, quick_vp());
  const SearchOutcome rb = search_and_refine(z, b, quick_vp());
  ASSERT_EQ(ra.trace.size(), rb.trace.size());
  for (std::size_t i = 0; i < ra.trace.size(); ++i) {
    EXPECT_EQ(ra.trace[i].fitness, rb.trace[i].fitness);
    EXPECT_EQ(ra.trace[i].accepted, rb.trace[i].accepted);
  }
  EXPECT_EQ(ra.fit.params.flatten(), rb.fit.params.flatten());
  EXPECT_EQ(ra.fit.states.x2, rb.fit.states.x2);
}

TEST(Search, DifferentSeedsExploreDifferently) {
  const ObservationSet z = two_component_data(4);
  const SearchOutcome a = search_and_refine(z, small_search(1), quick_vp());
  const SearchOutcome b = search_and_refine(z, small_search(2), quick_vp());
  bool differ = a.trace.size() != b.trace.size();
  for (std::size_t i = 0; !differ && i < a.trace.size(); ++i) {
    differ = a.trace[i].fitness != b.trace[i].fitness;
  }
  EXPECT_TRUE(differ);
}

TEST(Search, ZeroRoundsIsPlainFit) {
  const ObservationSet z = two_component_data(5);
  SearchConfig cfg = small_search(42);
  cfg.max_rounds = 0;
  VdpParams init = VdpParams::zeros(2);
  init.alpha << 1, 0.5, 1, 0.5;
  cfg.init = init;
  const PenaltyConfig vp = quick_vp();
  const SearchOutcome out = search_and_refine(z, cfg, vp);
  const FitResult direct = fit(z, vp, init);
  EXPECT_EQ(out.fit.params.flatten(), direct.params.flatten());
  EXPECT_EQ(out.fit.states.x1, direct.states.x1);
  EXPECT_EQ(out.fit.states.x2, direct.states.x2);
  EXPECT_TRUE(out.trace.empty());
}

TEST(Search, TraceSinkSeesEveryRecord) {
  const ObservationSet z = two_component_data(6);
  std::vector<TraceRecord> seen;
  const SearchOutcome out =
      search_and_refine(z, small_search(9), quick_vp(), [&](const TraceRecord& r) { seen.push_back(r); });
  ASSERT_EQ(seen.size(), out.trace.size());
  bool has_vp = false;
  for (const auto& r : seen) has_vp |= r.proposal == -1;
  EXPECT_TRUE(has_vp);
}

TEST(SearchConfig, Validation) {
  SearchConfig cfg;
  cfg.step_scales.alpha = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SearchConfig{};
  cfg.gamma = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SearchConfig{};
  cfg.proposals_per_round = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
