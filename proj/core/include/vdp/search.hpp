#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vdp/estimator.hpp"
#include "vdp/model.hpp"

namespace vdp {

struct StepScales {
  double alpha = 0.2;
  double coupling = 0.1;
  double x2 = 0.5;
};

struct SearchConfig {
  double gamma = 1.0;
  StepScales step_scales;
  int max_rounds = 60;
  int proposals_per_round = 50;
  int vp_every = 5;
  int patience = 20;
  std::uint64_t seed = 42;
  /// Worker threads for proposal scoring; 0 means hardware concurrency.
  int workers = 0;
  /// Starting point; defaults to a1 = 1, a2 = 0.5, W = 0 clipped to bounds.
  std::optional<VdpParams> init;
  /// Initial hidden state per component; defaults to hidden_state_guess.
  std::optional<Eigen::VectorXd> x2_init;

  void validate() const;
};

struct Provenance {
  int round = -1;       // -1: initial candidate
  int proposal = -1;    // -1: not a proposal (initial or VP refinement)
  int accepted_from = -1;  // round of the candidate it was perturbed from
};

struct Candidate {
  VdpParams params;
  Eigen::VectorXd x2_init;
  double fitness = -std::numeric_limits<double>::infinity();
  bool valid = false;
  Provenance provenance;
};

struct FitnessResult {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<double> pearson;
  std::vector<double> r_squared;
  /// First component whose correlation is undefined, if any.
  std::optional<int> invalid_component;

  bool valid() const noexcept { return !invalid_component.has_value(); }
};

/// min_i (c_i + gamma * R2_i) over components, where c_i is the Pearson
/// correlation and R2_i the coefficient of determination of the simulated x1
/// track against the observed one. A zero-variance track makes the fitness
/// -infinity and names the component.
FitnessResult fitness(const ObservationSet& z, const Eigen::MatrixXd& sim_x1,
                      double gamma);
FitnessResult fitness(const ObservationSet& z, const Trajectory& sim,
                      double gamma);

/// Scores a candidate by simulating from (first observation, x2_init).
/// Divergent simulations leave the candidate invalid.
void score(Candidate& c, const ObservationSet& z, double gamma,
           const Discretization& disc);

/// Gaussian perturbation of one randomly chosen group (an alpha row, a W
/// entry or an x2_init entry), clipped to the bounds. The result is unscored.
Candidate perturb(const Candidate& current, const StepScales& scales,
                  const ParameterBounds& bounds, std::mt19937_64& rng);

/// perturb followed by score.
Candidate propose(const Candidate& current, const SearchConfig& cfg,
                  const ParameterBounds& bounds, const ObservationSet& z,
                  const Discretization& disc, std::mt19937_64& rng);

struct TraceRecord {
  int round = 0;
  int proposal = 0;  // -1 marks a VP refinement
  double fitness = 0.0;
  bool valid = false;
  bool accepted = false;
};

struct SearchOutcome {
  FitResult fit;
  Candidate best;
  /// Best fitness after each round (index 0 is the initial candidate).
  std::vector<double> best_fitness;
  std::vector<TraceRecord> trace;
  int invalid_proposals = 0;
  int rounds = 0;
  std::string stop_reason;
};

using TraceSink = std::function<void(const TraceRecord&)>;

/// Greedy random walk over parameters and initial hidden states, alternated
/// with VP refinement every `vp_every` rounds. With max_rounds == 0 this is
/// exactly vp-estimator fit() from the initial candidate.
SearchOutcome search_and_refine(const ObservationSet& z,
                                const SearchConfig& search_cfg,
                                const PenaltyConfig& vp_cfg,
                                const TraceSink& sink = {});

}  // namespace vdp
