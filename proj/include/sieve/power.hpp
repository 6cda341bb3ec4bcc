// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIEVE_POWER_HPP
#define SIEVE_POWER_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "sieve/shift_estimation.hpp"
#include "sieve/spectrum.hpp"
#include "sieve/svrg.hpp"

namespace sieve {

// Outer shifted-and-inverted power method: random initialization, burn-in to
// a warm start (G <= 1/sqrt(10)), warm-start rounds with accept/reject, and
// the gap-free variant. Consumes any solver meeting the expected-error
// contract through the RoundSolver closure.

enum class Phase { kBurnIn, kWarmStart, kGapFree };

struct PowerState {
  VectorXd x;  // unit vector, normalized each round
  double lambda = 0;
  double lambda1_hat = 0;
  int round = 0;
  Phase phase = Phase::kBurnIn;
  int accepted = 0;
  int rejected = 0;
};

// Approximately applies B^{-1} to x (including choosing its own initial
// point); throws DivergedError on solver failure.
using RoundSolver = std::function<VectorXd(const VectorXd& x, Rng& rng)>;
// Rayleigh quotient estimate over Sigma.
using QuotEstimator = std::function<double(const VectorXd& x)>;

// i.i.d. standard normal coordinates, normalized.
inline VectorXd random_init(Eigen::Index d, Rng& rng) {
  if (d < 1) throw DimensionError("random_init: d must be >= 1");
  VectorXd x(d);
  rng.normal_fill(x);
  x.normalize();
  return x;
}

// x / (x^T B x): a coarse approximation of B^{-1} x whose B-norm error is
// bounded by alpha_1 sqrt(lambda_1(B^{-1})) G(x); handed to every solver call
// so relative-progress solvers meet the absolute warm-start contract.
template <typename Scalar>
Vector<Scalar> scaled_identity_warm_start(const ShiftedOperator<Scalar>& b,
                                          const Vector<Scalar>& x) {
  Scalar q = b.shift() * x.squaredNorm() - b.matrix().apply_a(x).squaredNorm();
  if (!(q > 0))
    throw ShiftError("scaled_identity_warm_start: x^T B x <= 0 (shift invalid)");
  return x / q;
}

// Exact inverted power update through the dense oracle (test surface).
template <typename Scalar>
Vector<Scalar> exact_power_step(const ShiftedOperator<Scalar>& b,
                                const DenseSpectrum<Scalar>& oracle,
                                const Vector<Scalar>& x) {
  Vector<Scalar> a = oracle.coeffs(x);
  if (std::abs(a[0]) < Scalar(1e-15) * x.norm())
    throw OrthogonalStartError("exact_power_step: orthogonal start");
  Vector<Scalar> y = oracle.solve_shifted(b.shift(), x);
  y.normalize();
  return y;
}

// One warm-start round. Computes xhat = solver(x) and accepts iff both
//   quot_estimator(xhat) >= lambda1_hat - (lambda - lambda1_hat)/6   and
//   |xhat|_2 >= (2/3) / (lambda - lambda1_hat);
// otherwise the state is kept. Solver divergence counts as a rejected round.
inline PowerState warm_start_round(const PowerState& state, const RoundSolver& solver,
                                   const QuotEstimator& quot_estimator, Rng& rng) {
  PowerState next = state;
  next.phase = Phase::kWarmStart;
  ++next.round;
  double delta = state.lambda - state.lambda1_hat;
  VectorXd xhat;
  try {
    xhat = solver(state.x, rng);
  } catch (const DivergedError&) {
    ++next.rejected;
    return next;
  }
  // Norm test first: it is exact and free, and it screens out degenerate
  // candidates (zero or non-finite) before the quotient estimate spends work.
  bool norm_ok = xhat.allFinite() && xhat.norm() >= (2.0 / 3.0) / delta;
  bool quot_ok =
      norm_ok && quot_estimator(xhat) >= state.lambda1_hat - delta / 6.0;
  if (quot_ok && norm_ok) {
    next.x = xhat.normalized();
    ++next.accepted;
  } else {
    ++next.rejected;
  }
  return next;
}

// Burn-in exhausted its round budget without certifying a warm start.
struct StalledError : Error {
  StalledError(const std::string& what, PowerState s)
      : Error(what), best(std::move(s)) {}
  PowerState best;
};

struct BurnInOptions {
  double target_ratio = 1e-3;  // per-round solve accuracy
  int max_rounds = 0;          // 0: 2 ceil(log2(d * kappa_hat)) + 10
  // Exit once lam1_run - quot(x) <= exit_fraction * (lambda - lam1_run); 0.05
  // certifies G <= 1/sqrt(10) through the quotient/potential sandwich.
  double exit_fraction = 0.05;
};

// Plain normalized approximate inverted power iteration until the exact
// Rayleigh quotient certifies a warm start.
inline PowerState burn_in(const ShiftedOperatord& b, const VectorXd& x0,
                          const RoundSolver& solver, double lambda1_hat,
                          const BurnInOptions& opt, Rng& rng,
                          const QuotEstimator& quot) {
  PowerState st;
  st.x = x0.normalized();
  st.lambda = b.shift();
  st.lambda1_hat = lambda1_hat;
  st.phase = Phase::kBurnIn;

  double mu_hat = b.shift() - lambda1_hat;
  if (!(mu_hat > 0)) throw ShiftError("burn_in: shift must exceed lambda1_hat");
  double kappa_hat = b.shift() / mu_hat;
  int max_rounds = opt.max_rounds > 0
                       ? opt.max_rounds
                       : 2 * static_cast<int>(std::ceil(std::log2(
                             static_cast<double>(b.matrix().dim()) * kappa_hat))) +
                             10;

  double lam1_run = lambda1_hat;
  for (int r = 0; r <= max_rounds; ++r) {
    double q = quot(st.x);
    lam1_run = std::max(lam1_run, q);
    if (lam1_run - q <= opt.exit_fraction * (st.lambda - lam1_run)) return st;
    if (r == max_rounds) break;
    st.x = solver(st.x, rng).normalized();
    ++st.round;
  }
  throw StalledError("burn_in: round budget exhausted without warm start", st);
}

enum class SolverKind { kSvrg, kAccelerated, kExactDense };

inline const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::kSvrg: return "svrg";
    case SolverKind::kAccelerated: return "accelerated";
    case SolverKind::kExactDense: return "exact-dense";
  }
  return "?";
}

// Per-round trace event. `x` points at the post-round iterate so oracle
// instrumentation (the G column) can be computed by the observer.
struct RoundEvent {
  int round = 0;
  Phase phase = Phase::kBurnIn;
  double quotient = 0;
  std::int64_t work = 0;  // grad_evals (offline) or samples (online)
  bool accepted = true;
  const VectorXd* x = nullptr;
};

struct DriverConfig {
  double epsilon = 1e-6;
  SolverKind solver = SolverKind::kSvrg;
  std::optional<SolverKind> estimation_solver;  // default: same as solver
  double alpha = 150;
  ShiftEstimationConfig estimation;
  BurnInOptions burn_in_opt;
  double warm_solve_ratio = 1.0 / 1600.0;
  int max_warm_rounds = 0;  // 0: schedule bound from the c1 sequence
  int burn_in_restarts = 3;
  AccelConfig accel;  // knobs for SolverKind::kAccelerated
  // externally supplied (lambda_bar, lambda1_hat); skips estimation
  std::optional<std::pair<double, double>> shift_override;
  std::function<void(const RoundEvent&)> observer;

  void validate() const {
    if (!(epsilon > 0) || !(epsilon < 1))
      throw ConfigError("DriverConfig: epsilon must be in (0,1)");
    if (!(warm_solve_ratio > 0) || !(warm_solve_ratio < 1))
      throw ConfigError("DriverConfig: warm_solve_ratio must be in (0,1)");
    if (!(burn_in_opt.target_ratio > 0) || !(burn_in_opt.target_ratio < 1))
      throw ConfigError("DriverConfig: burn-in target ratio must be in (0,1)");
  }
};

struct SolveReport {
  VectorXd x;
  double quotient = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";  // ok|stalled|diverged|budget|estimation-failed
  Phase phase = Phase::kWarmStart;
  int burn_rounds = 0;
  int warm_rounds = 0;
  int accepted = 0;
  int rejected = 0;
  std::int64_t grad_evals = 0;
  std::int64_t samples_used = 0;
  int estimation_iterations = 0;
  // theory parameters, for auditing runs against the formulas
  double lambda_bar = std::numeric_limits<double>::quiet_NaN();
  double lambda1_hat = std::numeric_limits<double>::quiet_NaN();
  double mu_hat = std::numeric_limits<double>::quiet_NaN();
  double s_bar = std::numeric_limits<double>::quiet_NaN();
  double eta = std::numeric_limits<double>::quiet_NaN();
  std::int64_t m_max = 0;
};

namespace detail {

// Solver dispatch: every call starts from the scaled-identity point.
struct OfflineSolver {
  const ShiftedOperatord* b;
  SolverKind kind;
  double lambda1_hat;
  AccelConfig accel;
  std::shared_ptr<DenseShiftSolver<double>> dense;
  std::int64_t grad_evals = 0;

  VectorXd operator()(const VectorXd& x, double ratio, Rng& rng) {
    VectorXd x0 = scaled_identity_warm_start(*b, x);
    switch (kind) {
      case SolverKind::kExactDense: {
        grad_evals += b->matrix().rows();
        return dense->solve(x);
      }
      case SolverKind::kAccelerated: {
        AccelConfig a = accel;
        a.lambda1_hat = lambda1_hat;
        SolveOutcome out = accelerated_solve(*b, x, x0, ratio, a, rng);
        grad_evals += out.grad_evals;
        return std::move(out.solution);
      }
      case SolverKind::kSvrg:
      default: {
        SvrgConfig cfg = svrg_config_for(*b, lambda1_hat);
        SolveOutcome out = solve_to_accuracy(*b, x, x0, ratio, cfg, rng);
        grad_evals += out.grad_evals;
        return std::move(out.solution);
      }
    }
  }
};

inline ShiftedSolveFn make_estimation_solver(const RowMatrixd& m, SolverKind kind,
                                             const AccelConfig& accel) {
  if (kind == SolverKind::kExactDense) {
    // One factorization per distinct shift; Algorithm 1 revisits each shift t times.
    auto cache = std::make_shared<std::vector<std::pair<double, std::shared_ptr<DenseShiftSolverd>>>>();
    return [&m, cache](double lambda, const VectorXd& rhs, double, Rng&) {
      for (auto& [lam, slv] : *cache)
        if (lam == lambda) return slv->solve(rhs);
      auto slv = std::make_shared<DenseShiftSolverd>(m, lambda);
      cache->emplace_back(lambda, slv);
      return slv->solve(rhs);
    };
  }
  if (kind == SolverKind::kAccelerated) {
    return [&m, accel](double lambda, const VectorXd& rhs, double ratio, Rng& rng) {
      ShiftedOperatord b(m, lambda);
      // lambda1 is unknown during estimation; the quotient of the rhs block
      // is not available here, so fall back on the crude lower bound from
      // powering Sigma once: |A rhs|^2/|rhs|^2 <= lambda1.
      double lam1_lb = rayleigh_quotient(m, rhs);
      AccelConfig a = accel;
      a.lambda1_hat = lam1_lb;
      return accelerated_solve(b, rhs, ratio, a, rng).solution;
    };
  }
  return [&m](double lambda, const VectorXd& rhs, double ratio, Rng& rng) {
    ShiftedOperatord b(m, lambda);
    double lam1_lb = rayleigh_quotient(m, rhs);
    SvrgConfig cfg = svrg_config_for(b, lam1_lb);
    return solve_to_accuracy(b, rhs, VectorXd::Zero(m.dim()), ratio, cfg, rng)
        .solution;
  };
}

}  // namespace detail

// Full offline pipeline: shift estimation -> burn-in -> warm-start rounds
// with the c1(i) = (1/sqrt(10)) 5^{-i} error schedule, stopping early once
// the exact quotient is within epsilon/2 (relative) of the running lambda1.
inline SolveReport compute_top_eigenvector(const RowMatrixd& m,
                                           const DriverConfig& cfg, Rng& rng) {
  cfg.validate();
  SolveReport rep;
  const Eigen::Index d = m.dim();
  if (d == 1) {
    rep.x = VectorXd::Ones(1);
    rep.quotient = m.frob_sq();
    return rep;
  }

  double lambda_bar, lam1_hat;
  if (cfg.shift_override) {
    lambda_bar = cfg.shift_override->first;
    lam1_hat = cfg.shift_override->second;
  } else {
    SolverKind est_kind = cfg.estimation_solver.value_or(cfg.solver);
    ShiftedSolveFn est_solver = detail::make_estimation_solver(m, est_kind, cfg.accel);
    Rng est_rng = rng.substream(0x5e1f);
    try {
      ShiftEstimate est = estimate_shift(m, cfg.alpha, est_solver, est_rng,
                                         cfg.estimation);
      lambda_bar = est.lambda_bar;
      lam1_hat = est.lam1_tilde;
      rep.estimation_iterations = est.iterations;
    } catch (const EstimationFailedError&) {
      rep.status = "estimation-failed";
      return rep;
    }
  }
  rep.lambda_bar = lambda_bar;
  rep.lambda1_hat = lam1_hat;
  rep.mu_hat = lambda_bar - lam1_hat;

  ShiftedOperatord b(m, lambda_bar);
  detail::OfflineSolver solver{&b, cfg.solver, lam1_hat, cfg.accel, nullptr};
  if (cfg.solver == SolverKind::kExactDense)
    solver.dense = std::make_shared<DenseShiftSolverd>(m, lambda_bar);
  if (cfg.solver == SolverKind::kSvrg) {
    SvrgConfig sc = svrg_config_for(b, lam1_hat);
    rep.s_bar = sc.s_bar;
    rep.eta = sc.eta;
    rep.m_max = sc.m_max;
  }

  QuotEstimator quot = [&m](const VectorXd& x) { return rayleigh_quotient(m, x); };
  auto emit = [&](const PowerState& st, double q, bool acc) {
    if (cfg.observer)
      cfg.observer(RoundEvent{st.round, st.phase, q, solver.grad_evals, acc, &st.x});
  };

  // burn-in (with restarts on stall/divergence)
  PowerState st;
  int restarts = 0;
  Rng init_rng = rng.substream(0x1417);
  while (true) {
    try {
      RoundSolver burn_solver = [&](const VectorXd& x, Rng& r) {
        return solver(x, cfg.burn_in_opt.target_ratio, r);
      };
      st = burn_in(b, random_init(d, init_rng), burn_solver, lam1_hat,
                   cfg.burn_in_opt, rng, quot);
      break;
    } catch (const StalledError& e) {
      if (++restarts > cfg.burn_in_restarts) {
        rep = SolveReport{};
        rep.status = "stalled";
        rep.x = e.best.x;
        rep.quotient = quot(e.best.x);
        rep.burn_rounds = e.best.round;
        rep.lambda_bar = lambda_bar;
        rep.lambda1_hat = lam1_hat;
        rep.grad_evals = solver.grad_evals;
        return rep;
      }
    } catch (const DivergedError&) {
      if (++restarts > cfg.burn_in_restarts) {
        rep.status = "diverged";
        rep.grad_evals = solver.grad_evals;
        return rep;
      }
    }
  }
  rep.burn_rounds = st.round;
  emit(st, quot(st.x), true);

  // warm-start rounds
  double mu_hat = lambda_bar - lam1_hat;
  double g_target =
      std::sqrt(std::max(cfg.epsilon * lam1_hat / mu_hat, 1e-300) / 1.2);
  int cap = cfg.max_warm_rounds > 0
                ? cfg.max_warm_rounds
                : std::max(6, static_cast<int>(std::ceil(
                                  std::log(0.3163 / std::min(g_target, 0.3162)) /
                                  std::log(5.0))) +
                                  6);
  st.phase = Phase::kWarmStart;
  double lam1_run = lam1_hat;
  int rounds_before = st.round;
  for (int i = 1; i <= cap; ++i) {
    double q = quot(st.x);
    lam1_run = std::max(lam1_run, q);
    if (lam1_run - q <= 0.5 * cfg.epsilon * q) break;
    RoundSolver round_solver = [&](const VectorXd& x, Rng& r) {
      return solver(x, cfg.warm_solve_ratio, r);
    };
    int acc_before = st.accepted;
    st = warm_start_round(st, round_solver, quot, rng);
    emit(st, quot(st.x), st.accepted > acc_before);
  }

  rep.x = st.x;
  rep.quotient = quot(st.x);
  rep.warm_rounds = st.round - rounds_before;
  rep.accepted = st.accepted;
  rep.rejected = st.rejected;
  rep.grad_evals = solver.grad_evals;
  return rep;
}

// Gap-free variant: lambda = lam1_tilde (1 + eps/200) from the gap-free
// estimator, then plain normalized approximate solves until the quotient is
// within eps/2 of the running lambda1 estimate. No accept/reject tests; the
// modified potential's contraction does not need them.
inline SolveReport gap_free_driver(const RowMatrixd& m, double epsilon,
                                   const DriverConfig& cfg, Rng& rng) {
  if (!(epsilon > 0) || !(epsilon < 1))
    throw ConfigError("gap_free_driver: epsilon must be in (0,1)");
  SolveReport rep;
  rep.phase = Phase::kGapFree;
  const Eigen::Index d = m.dim();
  if (d == 1) {
    rep.x = VectorXd::Ones(1);
    rep.quotient = m.frob_sq();
    return rep;
  }

  double lambda_bar, lam1_hat;
  if (cfg.shift_override) {
    lambda_bar = cfg.shift_override->first;
    lam1_hat = cfg.shift_override->second;
  } else {
    Rng est_rng = rng.substream(0x9f);
    GapFreeLambda gl = estimate_lambda1_gapfree(m, epsilon, est_rng);
    lambda_bar = gl.lambda;
    lam1_hat = gl.lam1_tilde;
  }
  rep.lambda_bar = lambda_bar;
  rep.lambda1_hat = lam1_hat;
  rep.mu_hat = lambda_bar - lam1_hat;

  ShiftedOperatord b(m, lambda_bar);
  detail::OfflineSolver solver{&b, cfg.solver, lam1_hat, cfg.accel, nullptr};
  if (cfg.solver == SolverKind::kExactDense)
    solver.dense = std::make_shared<DenseShiftSolverd>(m, lambda_bar);

  PowerState st;
  st.x = random_init(d, rng);
  st.lambda = lambda_bar;
  st.lambda1_hat = lam1_hat;
  st.phase = Phase::kGapFree;

  int max_rounds = 2 * static_cast<int>(std::ceil(
                           std::log2(static_cast<double>(d) / epsilon))) +
                   10;
  double lam1_run = lam1_hat;
  bool converged = false;
  for (int r = 0; r <= max_rounds; ++r) {
    double q = rayleigh_quotient(m, st.x);
    lam1_run = std::max(lam1_run, q);
    if (cfg.observer)
      cfg.observer(RoundEvent{st.round, Phase::kGapFree, q, solver.grad_evals,
                              true, &st.x});
    if (lam1_run - q <= 0.5 * epsilon * lam1_run) {
      converged = true;
      break;
    }
    if (r == max_rounds) break;
    try {
      st.x = solver(st.x, cfg.burn_in_opt.target_ratio, rng).normalized();
    } catch (const DivergedError&) {
      rep.status = "diverged";
      break;
    }
    ++st.round;
  }
  if (!converged && rep.status == "ok") rep.status = "stalled";

  rep.x = st.x;
  rep.quotient = rayleigh_quotient(m, st.x);
  rep.warm_rounds = st.round;
  rep.grad_evals = solver.grad_evals;
  return rep;
}

}  // namespace sieve

#endif  // SIEVE_POWER_HPP
