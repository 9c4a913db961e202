#include "vdp/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vdp/block_tridiagonal.hpp"
#include "vdp/error.hpp"
#include "vdp/stats.hpp"

namespace vdp {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinInnerStep = 1e-12;
constexpr int kMaxOuterBacktracks = 40;
constexpr double kRelativeObjectiveTol = 1e-8;
constexpr double kProjectedGradientTol = 1e-6;

void require_observations(const ObservationSet& z, int m, int n) {
  if (z.components() != m || z.length() != n) {
    std::ostringstream os;
    os << "observations are " << z.length() << "x" << z.components()
       << ", states are " << n << "x" << m;
    throw ContractError(os.str());
  }
}

// Hx - z, laid out like z (N x m, row-major traversal matches time-major).
Eigen::VectorXd data_residual(const StackedState& x, const ObservationSet& z) {
  const int m = x.components();
  Eigen::VectorXd d(static_cast<Eigen::Index>(m) * x.length());
  for (int k = 0; k < x.length(); ++k) {
    for (int i = 0; i < m; ++i) d(k * m + i) = x.x1(k, i) - z.values(k, i);
  }
  return d;
}

double penalty_objective(const Eigen::VectorXd& data_res,
                         const Eigen::VectorXd& dyn_res, double lambda) {
  return 0.5 * data_res.squaredNorm() + 0.5 * lambda * dyn_res.squaredNorm();
}

// H^T (Hx - z) + lambda * G_x^T r
Eigen::VectorXd state_gradient(const StackedState& x,
                               const Eigen::VectorXd& data_res,
                               const Linearization& lin, double lambda) {
  Eigen::VectorXd g = lambda * lin.state_jacobian.apply_transpose(lin.residual);
  const int m = x.components();
  for (int k = 0; k < x.length(); ++k) {
    for (int i = 0; i < m; ++i) g(x.index(k, i, 0)) += data_res(k * m + i);
  }
  return g;
}

// H^T H + lambda * G_x^T G_x, block tridiagonal with 2m x 2m blocks.
BlockTridiagonal normal_matrix(const BidiagonalJacobian& gx, double lambda) {
  const int m = gx.components();
  const int n = gx.length();
  const int b = 2 * m;
  BlockTridiagonal a(b, n);
  for (int k = 0; k < n; ++k) {
    Eigen::MatrixXd& d = a.diag(k);
    d = lambda * Eigen::MatrixXd::Identity(b, b);
    if (k + 1 < n) {
      const Eigen::MatrixXd& s = gx.sub(k + 1);
      d.noalias() += lambda * s.transpose() * s;
      a.lower(k) = lambda * s;
    }
    for (int i = 0; i < m; ++i) d(2 * i, 2 * i) += 1.0;
  }
  return a;
}

int first_nonfinite_component(const StackedState& x, const Eigen::VectorXd& r) {
  for (int k = 0; k < x.length(); ++k) {
    for (int i = 0; i < x.components(); ++i) {
      for (int v = 0; v < 2; ++v) {
        const auto idx = x.index(k, i, v);
        // Squares catch entries whose contribution to the objective overflows.
        if (!std::isfinite(x.flat()(idx)) || !std::isfinite(r(idx) * r(idx))) return i;
      }
    }
  }
  return -1;
}

}  // namespace

ParameterBounds ParameterBounds::uniform(int m, Interval alpha1, Interval alpha2,
                                         Interval coupling) {
  const int np = VdpParams::parameter_count(m);
  ParameterBounds b{Eigen::VectorXd(np), Eigen::VectorXd(np)};
  b.lo.head(m).setConstant(alpha1.lo);
  b.hi.head(m).setConstant(alpha1.hi);
  b.lo.segment(m, m).setConstant(alpha2.lo);
  b.hi.segment(m, m).setConstant(alpha2.hi);
  b.lo.tail(m * m).setConstant(coupling.lo);
  b.hi.tail(m * m).setConstant(coupling.hi);
  b.validate();
  return b;
}

ParameterBounds ParameterBounds::defaults(int m) {
  return BoundsSpec{}.expand(m);
}

ParameterBounds ParameterBounds::unbounded(int m) {
  const double inf = std::numeric_limits<double>::infinity();
  return uniform(m, {-inf, inf}, {-inf, inf}, {-inf, inf});
}

void ParameterBounds::validate() const {
  if (lo.size() != hi.size()) throw ContractError("bound vectors differ in length");
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (std::isnan(lo(i)) || std::isnan(hi(i)) || lo(i) > hi(i)) {
      std::ostringstream os;
      os << "invalid bound interval at parameter " << i;
      throw ContractError(os.str());
    }
  }
}

Eigen::VectorXd ParameterBounds::project(const Eigen::VectorXd& p) const {
  return p.cwiseMax(lo).cwiseMin(hi);
}

bool ParameterBounds::contains(const Eigen::VectorXd& p) const {
  return p.size() == lo.size() && (p.array() >= lo.array()).all() &&
         (p.array() <= hi.array()).all();
}

void PenaltyConfig::validate() const {
  if (lambda_schedule.empty()) throw ContractError("lambda schedule is empty");
  for (std::size_t s = 0; s < lambda_schedule.size(); ++s) {
    if (!(lambda_schedule[s] > 0.0) || !std::isfinite(lambda_schedule[s])) {
      throw ContractError("lambda values must be finite and positive");
    }
    if (s > 0 && !(lambda_schedule[s] > lambda_schedule[s - 1])) {
      throw ContractError("lambda schedule must be strictly increasing");
    }
  }
  if (!(inner_tol_first > 0.0) || !(inner_tol_last > 0.0)) {
    throw ContractError("inner tolerances must be positive");
  }
  if (inner_max_iter_first < 1 || inner_max_iter_last < 1) {
    throw ContractError("inner iteration caps must be positive");
  }
  if (!(outer_step > 0.0)) throw ContractError("outer step must be positive");
  if (outer_max_iter < 0) throw ContractError("outer_max_iter must be >= 0");
  disc.validate();
}

InnerSettings PenaltyConfig::stage(int s) const {
  const int n = stages();
  const double frac = n > 1 ? static_cast<double>(s) / (n - 1) : 1.0;
  InnerSettings out;
  out.lambda = lambda_schedule.at(static_cast<std::size_t>(s));
  out.tol = inner_tol_first * std::pow(inner_tol_last / inner_tol_first, frac);
  out.max_iter = static_cast<int>(std::lround(
      inner_max_iter_first + (inner_max_iter_last - inner_max_iter_first) * frac));
  return out;
}

double objective(const StackedState& x, const VdpParams& params,
                 const InitAnchor& anchor, const ObservationSet& z,
                 double lambda, const Discretization& disc) {
  require_observations(z, x.components(), x.length());
  const Eigen::VectorXd r = residual(x, params, anchor, disc);
  return penalty_objective(data_residual(x, z), r, lambda);
}

InnerResult inner_solve(const VdpParams& params, const InitAnchor& anchor,
                        const ObservationSet& z, const InnerSettings& settings,
                        const Discretization& disc, const StackedState& x_init) {
  require_observations(z, x_init.components(), x_init.length());
  if (!x_init.flat().allFinite()) throw ContractError("initial states are not finite");
  if (!(settings.lambda > 0.0)) throw ContractError("lambda must be positive");

  InnerResult out{x_init, 0.0, 0.0, 0, false, ""};
  StackedState& x = out.x;
  const double lambda = settings.lambda;

  for (int it = 0;; ++it) {
    const Linearization lin = linearize(x, params, anchor, disc, false);
    const Eigen::VectorXd dres = data_residual(x, z);
    const double f = penalty_objective(dres, lin.residual, lambda);
    const Eigen::VectorXd grad = state_gradient(x, dres, lin, lambda);
    out.objective = f;
    out.grad_norm = grad.lpNorm<Eigen::Infinity>();
    out.iterations = it;
    if (!std::isfinite(f)) {
      throw NumericError("inner objective is not finite");
    }
    if (out.grad_norm <= settings.tol) {
      out.converged = true;
      out.reason = "gradient tolerance";
      return out;
    }
    if (it >= settings.max_iter) {
      out.reason = "iteration limit";
      return out;
    }

    const Eigen::VectorXd dir =
        normal_matrix(lin.state_jacobian, lambda).solve(-grad);
    const double slope = grad.dot(dir);
    // Near the minimum the predicted decrease drops below the rounding error
    // of f, so a full step that changes f only at that level is accepted.
    const double slack = 16.0 * std::numeric_limits<double>::epsilon() * std::abs(f);

    bool accepted = false;
    for (double t = 1.0; t >= kMinInnerStep; t *= 0.5) {
      StackedState trial(x.flat() + t * dir, x.components(), x.length());
      const double ft = objective(trial, params, anchor, z, lambda, disc);
      if (std::isfinite(ft) && ft <= f + kArmijo * t * slope + slack) {
        x = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.reason = "line search step underflow";
      return out;
    }
  }
}

ValueGradient value_gradient(const VdpParams& params, const InitAnchor& anchor,
                             const ObservationSet& z,
                             const InnerSettings& settings,
                             const Discretization& disc,
                             const StackedState& x_init) {
  ValueGradient out;
  out.inner = inner_solve(params, anchor, z, settings, disc, x_init);
  out.accurate = out.inner.converged;
  out.value = out.inner.objective;
  const Linearization lin = linearize(out.inner.x, params, anchor, disc, true);
  out.gradient = settings.lambda * lin.param_jacobian.apply_transpose(lin.residual);
  return out;
}

Eigen::MatrixXd hidden_state_guess(const Eigen::MatrixXd& x1, double dt) {
  Eigen::MatrixXd x2(x1.rows(), x1.cols());
  for (Eigen::Index i = 0; i < x1.cols(); ++i) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < x1.rows(); ++k) {
      x2(k, i) = acc;
      acc -= dt * x1(k, i);
    }
    if (x1.rows() > 0) x2.col(i).array() -= x2.col(i).mean();
  }
  if (!x2.allFinite()) x2.setZero();
  return x2;
}

StackedState initial_states(const ObservationSet& z, double dt) {
  return initial_states(z, hidden_state_guess(z.values, dt));
}

StackedState initial_states(const ObservationSet& z, const Eigen::MatrixXd& x2) {
  if (x2.rows() != z.values.rows() || x2.cols() != z.values.cols()) {
    throw ContractError("hidden track shape does not match the observations");
  }
  return StackedState::from_trajectory(Trajectory{z.values, x2, 1.0});
}

std::vector<ComponentStats> component_stats(const ObservationSet& z,
                                            const Eigen::MatrixXd& x1) {
  if (x1.rows() != z.values.rows() || x1.cols() != z.values.cols()) {
    throw ContractError("state track shape does not match the observations");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<ComponentStats> out;
  for (Eigen::Index i = 0; i < x1.cols(); ++i) {
    ComponentStats s;
    s.pearson = stats::pearson(z.values.col(i), x1.col(i)).value_or(nan);
    s.r_squared = stats::r_squared(z.values.col(i), x1.col(i)).value_or(nan);
    out.push_back(s);
  }
  return out;
}

FitResult fit(const ObservationSet& z, const PenaltyConfig& cfg,
              const VdpParams& init, const std::optional<StackedState>& x_init) {
  cfg.validate();
  init.validate();
  const int m = init.components();
  if (z.components() != m) throw ContractError("observations and parameters disagree on m");
  if (z.length() < 2) throw ContractError("need at least 2 observations");
  if (!z.values.allFinite()) throw ContractError("observations contain non-finite values");

  const ParameterBounds bounds = cfg.bounds.expand(m);
  Eigen::VectorXd p = init.flatten();
  if (!bounds.contains(p)) throw ContractError("initial parameters violate the bounds");

  StackedState x = x_init ? *x_init : initial_states(z, cfg.disc.dt);
  require_observations(z, x.components(), x.length());
  const InitAnchor anchor{x.state(0)};

  FitResult result;
  result.substeps = cfg.disc.substeps;
  result.observations = z.values;

  for (int s = 0; s < cfg.stages(); ++s) {
    const InnerSettings settings = cfg.stage(s);
    const VdpParams params = VdpParams::unflatten(p, m);
    auto not_finite = [&](const StackedState& at) {
      const Eigen::VectorXd r = residual(at, params, anchor, cfg.disc);
      std::ostringstream os;
      os << "value function is not finite at the starting parameters of stage " << s
         << " (component " << std::max(0, first_nonfinite_component(at, r)) << ")";
      return NumericError(os.str());
    };
    ValueGradient cur;
    try {
      cur = value_gradient(params, anchor, z, settings, cfg.disc, x);
    } catch (const NumericError&) {
      throw not_finite(x);
    }
    if (!std::isfinite(cur.value) || !cur.gradient.allFinite()) throw not_finite(cur.inner.x);
    x = cur.inner.x;
    result.objective_history.push_back({s, 0, settings.lambda, cur.value});

    Eigen::VectorXd prev_p, prev_g;
    double t = 0.0;
    std::string reason = "iteration limit";
    bool stage_converged = false;
    for (int it = 1; it <= cfg.outer_max_iter; ++it) {
      const double pg_norm =
          (p - bounds.project(p - cur.gradient)).lpNorm<Eigen::Infinity>();
      if (pg_norm < kProjectedGradientTol) {
        reason = "projected gradient";
        stage_converged = true;
        break;
      }

      const double gmax = cur.gradient.lpNorm<Eigen::Infinity>();
      if (prev_p.size() == 0) {
        t = cfg.outer_step / gmax;
      } else {
        const Eigen::VectorXd sp = p - prev_p;
        const Eigen::VectorXd yg = cur.gradient - prev_g;
        const double sy = sp.dot(yg);
        t = sy > 0.0 ? sp.squaredNorm() / sy : 2.0 * t;
        t = std::clamp(t, 1e-12 / gmax, 1e6);
      }

      bool accepted = false;
      ValueGradient next;
      Eigen::VectorXd trial_p;
      for (int bt = 0; bt < kMaxOuterBacktracks; ++bt, t *= 0.5) {
        trial_p = bounds.project(p - t * cur.gradient);
        const double move = (trial_p - p).squaredNorm();
        if (move == 0.0) break;
        next = value_gradient(VdpParams::unflatten(trial_p, m), anchor, z,
                              settings, cfg.disc, x);
        if (std::isfinite(next.value) && next.gradient.allFinite() &&
            next.value <= cur.value - kArmijo / t * move) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        reason = "line search failed";
        break;
      }

      const double decrease = cur.value - next.value;
      prev_p = p;
      prev_g = cur.gradient;
      p = trial_p;
      cur = std::move(next);
      x = cur.inner.x;
      result.objective_history.push_back({s, it, settings.lambda, cur.value});
      if (decrease < kRelativeObjectiveTol * (1.0 + std::abs(cur.value))) {
        reason = "objective change";
        stage_converged = true;
        break;
      }
    }
    result.converged = stage_converged && cur.accurate;
    result.reason = reason;
    if (!cur.accurate) result.reason += " (inner solve not converged)";
  }

  result.params = VdpParams::unflatten(p, m);
  result.states = x.to_trajectory(cfg.disc.dt);
  result.stats = component_stats(z, result.states.x1);
  return result;
}

}  // namespace vdp
