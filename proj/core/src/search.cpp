#include "vdp/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "vdp/error.hpp"
#include "vdp/stats.hpp"

namespace vdp {

namespace {

constexpr double kPlateauTol = 1e-6;

State start_state(const ObservationSet& z, const Eigen::VectorXd& x2_init) {
  return State(z.values.row(0).transpose(), x2_init);
}

// Scores candidates[i] for all i, spreading the work over `workers` threads.
// Results are independent of the worker count.
void score_all(std::vector<Candidate>& candidates, const ObservationSet& z,
               double gamma, const Discretization& disc, int workers) {
  const int n = static_cast<int>(candidates.size());
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    for (auto& c : candidates) score(c, z, gamma, disc);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) score(candidates[i], z, gamma, disc);
    });
  }
}

StackedState states_for(const Candidate& c, const ObservationSet& z,
                        const Discretization& disc) {
  try {
    const Trajectory sim =
        simulate(c.params, start_state(z, c.x2_init), z.length(), disc);
    return initial_states(z, sim.x2);
  } catch (const DivergenceError&) {
    Eigen::MatrixXd x2 = hidden_state_guess(z.values, disc.dt);
    for (Eigen::Index i = 0; i < x2.cols(); ++i) {
      x2.col(i).array() += c.x2_init(i) - x2(0, i);
    }
    return initial_states(z, x2);
  }
}

FitResult candidate_to_fit(const Candidate& c, const ObservationSet& z,
                           const Discretization& disc) {
  FitResult r;
  r.params = c.params;
  r.states = simulate(c.params, start_state(z, c.x2_init), z.length(), disc);
  r.substeps = disc.substeps;
  r.stats = component_stats(z, r.states.x1);
  r.fitness = c.fitness;
  r.converged = true;
  r.reason = "stochastic search candidate";
  r.observations = z.values;
  return r;
}

}  // namespace

void SearchConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ContractError("gamma must be finite and nonnegative");
  }
  if (!(step_scales.alpha > 0.0) || !(step_scales.coupling > 0.0) ||
      !(step_scales.x2 > 0.0)) {
    throw ContractError("step scales must be positive");
  }
  if (max_rounds < 0 || proposals_per_round < 1 || vp_every < 0 || patience < 1 ||
      workers < 0) {
    throw ContractError("invalid search round settings");
  }
}

FitnessResult fitness(const ObservationSet& z, const Eigen::MatrixXd& sim_x1,
                      double gamma) {
  if (sim_x1.rows() != z.values.rows() || sim_x1.cols() != z.values.cols()) {
    throw ContractError("simulation and observations are not aligned");
  }
  FitnessResult out;
  double worst = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < sim_x1.cols(); ++i) {
    const auto c = stats::pearson(z.values.col(i), sim_x1.col(i));
    const auto r2 = stats::r_squared(z.values.col(i), sim_x1.col(i));
    out.pearson.push_back(c.value_or(std::numeric_limits<double>::quiet_NaN()));
    out.r_squared.push_back(r2.value_or(std::numeric_limits<double>::quiet_NaN()));
    if (!c || !r2) {
      if (!out.invalid_component) out.invalid_component = static_cast<int>(i);
      continue;
    }
    worst = std::min(worst, *c + gamma * *r2);
  }
  out.value = out.invalid_component ? -std::numeric_limits<double>::infinity()
                                    : worst;
  return out;
}

FitnessResult fitness(const ObservationSet& z, const Trajectory& sim,
                      double gamma) {
  return fitness(z, sim.x1, gamma);
}

void score(Candidate& c, const ObservationSet& z, double gamma,
           const Discretization& disc) {
  c.valid = false;
  c.fitness = -std::numeric_limits<double>::infinity();
  try {
    const Trajectory sim =
        simulate(c.params, start_state(z, c.x2_init), z.length(), disc);
    const FitnessResult f = fitness(z, sim, gamma);
    c.valid = f.valid();
    c.fitness = f.value;
  } catch (const DivergenceError&) {
  }
}

Candidate perturb(const Candidate& current, const StepScales& scales,
                  const ParameterBounds& bounds, std::mt19937_64& rng) {
  const int m = current.params.components();
  Candidate next = current;
  next.valid = false;
  next.fitness = -std::numeric_limits<double>::infinity();

  std::uniform_int_distribution<int> group(0, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (group(rng)) {
    case 0: {
      const int i = std::uniform_int_distribution<int>(0, m - 1)(rng);
      next.params.alpha(i, 0) += scales.alpha * normal(rng);
      next.params.alpha(i, 1) += scales.alpha * normal(rng);
      break;
    }
    case 1: {
      const int e = std::uniform_int_distribution<int>(0, m * m - 1)(rng);
      next.params.coupling(e / m, e % m) += scales.coupling * normal(rng);
      break;
    }
    default: {
      const int i = std::uniform_int_distribution<int>(0, m - 1)(rng);
      next.x2_init(i) += scales.x2 * normal(rng);
      break;
    }
  }
  next.params = VdpParams::unflatten(bounds.project(next.params.flatten()), m);
  return next;
}

Candidate propose(const Candidate& current, const SearchConfig& cfg,
                  const ParameterBounds& bounds, const ObservationSet& z,
                  const Discretization& disc, std::mt19937_64& rng) {
  Candidate c = perturb(current, cfg.step_scales, bounds, rng);
  score(c, z, cfg.gamma, disc);
  return c;
}

SearchOutcome search_and_refine(const ObservationSet& z,
                                const SearchConfig& cfg,
                                const PenaltyConfig& vp_cfg,
                                const TraceSink& sink) {
  cfg.validate();
  vp_cfg.validate();
  const int m = z.components();
  if (m < 1 || z.length() < 2) throw ContractError("observations are too small");
  const Discretization& disc = vp_cfg.disc;
  const ParameterBounds bounds = vp_cfg.bounds.expand(m);

  VdpParams init = VdpParams::zeros(m);
  if (cfg.init) {
    init = *cfg.init;
    init.validate();
    if (init.components() != m) throw ContractError("initial parameters disagree on m");
  } else {
    init.alpha.col(0).setConstant(1.0);
    init.alpha.col(1).setConstant(0.5);
    init = VdpParams::unflatten(bounds.project(init.flatten()), m);
  }

  SearchOutcome out;

  if (cfg.max_rounds == 0) {
    std::optional<StackedState> x_init;
    if (cfg.x2_init) {
      Candidate c;
      c.params = init;
      c.x2_init = *cfg.x2_init;
      x_init = states_for(c, z, disc);
    }
    out.fit = fit(z, vp_cfg, init, x_init);
    out.fit.fitness = fitness(z, out.fit.states, cfg.gamma).value;
    out.best.params = out.fit.params;
    out.best.x2_init = out.fit.states.x2.row(0).transpose();
    score(out.best, z, cfg.gamma, disc);
    out.best_fitness.push_back(out.best.fitness);
    out.stop_reason = "no search rounds";
    return out;
  }

  Candidate best;
  best.params = init;
  best.x2_init = cfg.x2_init ? *cfg.x2_init
                             : Eigen::VectorXd(hidden_state_guess(z.values, disc.dt)
                                                   .row(0)
                                                   .transpose());
  if (best.x2_init.size() != m) throw ContractError("x2_init has the wrong length");
  score(best, z, cfg.gamma, disc);

  std::optional<FitResult> best_fit;  // set while `best` came from VP
  bool refined_since_change = false;

  auto emit = [&](const TraceRecord& r) {
    out.trace.push_back(r);
    if (sink) sink(r);
  };

  auto refine = [&](int round) {
    refined_since_change = true;
    FitResult vp;
    try {
      vp = fit(z, vp_cfg, best.params, states_for(best, z, disc));
    } catch (const NumericError&) {
      emit({round, -1, -std::numeric_limits<double>::infinity(), false, false});
      return;
    }
    Candidate c;
    c.params = vp.params;
    c.x2_init = vp.states.x2.row(0).transpose();
    c.provenance = {round, -1, best.provenance.round};
    score(c, z, cfg.gamma, disc);
    const bool accept = c.valid && c.fitness > best.fitness;
    emit({round, -1, c.fitness, c.valid, accept});
    if (accept) {
      best = std::move(c);
      vp.fitness = best.fitness;
      best_fit = std::move(vp);
    }
  };

  const int workers = cfg.workers > 0
                          ? cfg.workers
                          : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::mt19937_64 rng(cfg.seed);
  StepScales scales = cfg.step_scales;
  bool halved = false;
  out.best_fitness.push_back(best.fitness);
  out.stop_reason = "round limit";

  for (int round = 1; round <= cfg.max_rounds; ++round) {
    out.rounds = round;
    const Candidate base = best;
    std::vector<Candidate> proposals;
    proposals.reserve(static_cast<std::size_t>(cfg.proposals_per_round));
    for (int p = 0; p < cfg.proposals_per_round; ++p) {
      proposals.push_back(perturb(base, scales, bounds, rng));
      proposals.back().provenance = {round, p, base.provenance.round};
    }
    score_all(proposals, z, cfg.gamma, disc, workers);

    int invalid = 0;
    for (int p = 0; p < cfg.proposals_per_round; ++p) {
      Candidate& c = proposals[static_cast<std::size_t>(p)];
      const bool accept = c.valid && c.fitness > best.fitness;
      if (!c.valid) ++invalid;
      emit({round, p, c.fitness, c.valid, accept});
      if (accept) {
        best = std::move(c);
        best_fit.reset();
        refined_since_change = false;
      }
    }
    out.invalid_proposals += invalid;

    bool stop = false;
    if (invalid == cfg.proposals_per_round) {
      if (halved) {
        out.stop_reason = "all proposals invalid after halving step scales";
        stop = true;
      } else {
        scales.alpha *= 0.5;
        scales.coupling *= 0.5;
        scales.x2 *= 0.5;
        halved = true;
      }
    }

    if (!stop && cfg.vp_every > 0 && round % cfg.vp_every == 0) refine(round);
    out.best_fitness.push_back(best.fitness);
    if (stop) break;

    const auto n = out.best_fitness.size();
    if (n > static_cast<std::size_t>(cfg.patience)) {
      const double gain = out.best_fitness[n - 1] -
                          out.best_fitness[n - 1 - static_cast<std::size_t>(cfg.patience)];
      if (gain < kPlateauTol) {
        out.stop_reason = "fitness plateau";
        break;
      }
    }
  }

  if (cfg.vp_every > 0 && !refined_since_change) {
    refine(out.rounds);
    out.best_fitness.back() = best.fitness;
  }

  if (!best.valid) {
    throw NumericError(
        "stochastic search found no valid candidate (every simulation diverged or "
        "produced a flat track; a smaller dt or more substeps may help)");
  }
  out.fit = best_fit ? *best_fit : candidate_to_fit(best, z, disc);
  out.fit.fitness = best.fitness;
  out.best = best;
  return out;
}

}  // namespace vdp
