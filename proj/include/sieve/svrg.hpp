// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIEVE_SVRG_HPP
#define SIEVE_SVRG_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>

#include "sieve/shifted_operator.hpp"

namespace sieve {

// Solvers for B x = c, B = lambda*I - A^T A, via stochastic variance reduced
// gradient steps on f(x) = 1/2 x^T B x - c^T x with the non-convex component
// split psi_i(x) = 1/2 x^T (lambda |a_i|^2/|A|_F^2 I - a_i a_i^T) x - (1/n) c^T x
// and row sampling p_i = |a_i|^2/|A|_F^2.

struct SvrgConfig {
  double eta = 0;        // step size
  std::int64_t m_max = 0;  // epoch length bound
  double s_bar = 0;      // smoothness/variance parameter
  double mu = 0;         // strong convexity estimate lambda - lambda1_hat
  int epoch_count = 1;   // chained constant-progress epochs
  std::uint64_t seed = 0;
  // Return the final iterate x_{m_max} instead of x_m for m drawn uniformly
  // from {1..m_max}. Experimental: the analysis covers only the uniform draw.
  bool experimental_last_iterate = false;

  void validate() const {
    if (!(eta > 0)) throw ConfigError("SvrgConfig: eta must be positive");
    if (!(2.0 * eta * s_bar < 1.0))
      throw ConfigError("SvrgConfig: need 2*eta*s_bar < 1");
    if (m_max < 1) throw ConfigError("SvrgConfig: m_max must be >= 1");
    if (!(mu > 0)) throw ConfigError("SvrgConfig: mu must be positive");
  }
};

// Constant-progress parameters: s_bar = 2*lambda1_hat*|A|_F^2/(lambda-lambda1_hat),
// eta = 1/(8 s_bar), m_max = ceil(64 s_bar / mu).
template <typename Scalar>
SvrgConfig svrg_config_for(const ShiftedOperator<Scalar>& b, double lambda1_hat) {
  double mu = static_cast<double>(b.shift()) - lambda1_hat;
  if (!(mu > 0)) throw ShiftError("svrg_config_for: shift must exceed lambda1_hat");
  SvrgConfig cfg;
  cfg.mu = mu;
  cfg.s_bar = 2.0 * lambda1_hat * static_cast<double>(b.matrix().frob_sq()) / mu;
  cfg.eta = 1.0 / (8.0 * cfg.s_bar);
  cfg.m_max = static_cast<std::int64_t>(std::ceil(64.0 * cfg.s_bar / mu));
  return cfg;
}

struct SolveOutcome {
  VectorXd solution;
  std::int64_t epochs_run = 0;
  std::int64_t grad_evals = 0;   // sum over epochs of (n + epoch length)
  std::int64_t steps_total = 0;  // stochastic steps only
  std::optional<double> est_error_b;  // filled by instrumented tests only
};

// Iterate left the basin (bad mu estimate or invalid shift); carries the last
// finite iterate for diagnostics.
struct DivergedError : Error {
  DivergedError(const std::string& what, VectorXd iterate)
      : Error(what), last_iterate(std::move(iterate)) {}
  VectorXd last_iterate;
};

// grad psi_i(x) = (lambda |a_i|^2/|A|_F^2) x - a_i (a_i^T x) - rhs/n.
template <typename Scalar>
Vector<Scalar> component_gradient(const ShiftedOperator<Scalar>& b,
                                  std::int64_t i, const Vector<Scalar>& x,
                                  const Vector<Scalar>& rhs) {
  const auto& m = b.matrix();
  m.check_dim(x.size());
  m.check_dim(rhs.size());
  Scalar s = b.shift() * m.row_norm_sq(i) / m.frob_sq();
  Vector<Scalar> g = s * x - rhs / Scalar(m.rows());
  m.row_axpy(i, -m.row_dot(i, x), g);
  return g;
}

namespace detail {

// Shared epoch body. With gamma = 0 and prox_center ignored this is the plain
// epoch; with gamma > 0 it is the gamma-regularized epoch around prox_center.
// Update (classic variance-reduced step, direction unbiased for grad f(x_k)):
//   x_{k+1} = x_k - eta [ (1/p_i)(grad psi_i(x_k) - grad psi_i(x_0)) + grad f(x_0) ]
// In delta = x - x_0 coordinates the sampled difference collapses to
//   (1/p_i)(grad psi_i - grad psi_i(x_0)) = lambda_eff*delta - (1/p_i) a_i (a_i^T delta),
// lambda_eff = lambda + gamma, since (1/p_i) * lambda |a_i|^2/|A|_F^2 = lambda.
inline VectorXd epoch_body(const ShiftedOperatord& b, const SvrgConfig& cfg,
                           const VectorXd& x0, const VectorXd& rhs, double gamma,
                           const VectorXd* prox_center, Rng& rng,
                           std::int64_t* steps_out, double guard = 0) {
  cfg.validate();
  const auto& m = b.matrix();
  m.check_dim(x0.size());
  m.check_dim(rhs.size());

  VectorXd g0 = apply_shifted(b, x0) - rhs;
  if (gamma > 0) g0 += gamma * (x0 - *prox_center);

  std::int64_t mt = cfg.experimental_last_iterate
                        ? cfg.m_max
                        : 1 + static_cast<std::int64_t>(
                                  rng.uniform_int(static_cast<std::uint64_t>(cfg.m_max)));
  if (steps_out) *steps_out = mt;

  const double eta = cfg.eta;
  const double decay = 1.0 - eta * (b.shift() + gamma);
  const double frob = m.frob_sq();
  // The guard is pinned at the start of the whole solve so a diverging chain
  // of epochs cannot outrun it through its own growing anchors.
  if (guard <= 0) guard = 1e12 * (x0.norm() + rhs.norm() / cfg.mu);
  if (!(x0.norm() <= guard))
    throw DivergedError("svrg epoch diverged (check shift/mu estimate)", x0);

  VectorXd delta = VectorXd::Zero(x0.size());
  for (std::int64_t k = 0; k < mt; ++k) {
    std::int64_t i = b.sample_row(rng);
    double w = m.row_dot(i, delta);
    double coef = eta * w * frob / m.row_norm_sq(i);
    delta = decay * delta - eta * g0;
    m.row_axpy(i, coef, delta);
    if ((k & 255) == 255 || k + 1 == mt) {
      if (!delta.allFinite() || x0.norm() + delta.norm() > guard) {
        VectorXd last = x0 + delta;
        if (!last.allFinite()) last = x0;
        throw DivergedError("svrg epoch diverged (check shift/mu estimate)",
                            std::move(last));
      }
    }
  }
  return x0 + delta;
}

}  // namespace detail

// One SVRG epoch: full anchor gradient at x0, then m ~ U{1..m_max} corrected
// stochastic steps with i ~ p. With the constant-progress parameters the
// expected B-norm-squared error halves.
inline VectorXd svrg_epoch(const ShiftedOperatord& b, const SvrgConfig& cfg,
                           const VectorXd& x0, const VectorXd& rhs, Rng& rng,
                           std::int64_t* steps_out = nullptr, double guard = 0) {
  return detail::epoch_body(b, cfg, x0, rhs, 0.0, nullptr, rng, steps_out, guard);
}

inline SolveOutcome solve_constant_progress(const ShiftedOperatord& b,
                                            const VectorXd& rhs, const VectorXd& x0,
                                            const SvrgConfig& cfg, Rng& rng) {
  SolveOutcome out;
  std::int64_t steps = 0;
  out.solution = svrg_epoch(b, cfg, x0, rhs, rng, &steps);
  out.epochs_run = 1;
  out.steps_total = steps;
  out.grad_evals = b.matrix().rows() + steps;
  return out;
}

// Chains ceil(log2(1/target_ratio)) constant-progress epochs, re-anchoring at
// each epoch: E |x - x*|_B^2 <= target_ratio * |x0 - x*|_B^2.
inline SolveOutcome solve_to_accuracy(const ShiftedOperatord& b, const VectorXd& rhs,
                                      const VectorXd& x0, double target_ratio,
                                      const SvrgConfig& cfg, Rng& rng) {
  if (!(target_ratio > 0) || target_ratio > 1)
    throw ConfigError("solve_to_accuracy: target_ratio must be in (0, 1]");
  SolveOutcome out;
  out.solution = x0;
  if (target_ratio == 1.0) return out;
  auto epochs = static_cast<std::int64_t>(std::ceil(std::log2(1.0 / target_ratio)));
  const double guard = 1e12 * (x0.norm() + rhs.norm() / cfg.mu);
  for (std::int64_t e = 0; e < epochs; ++e) {
    std::int64_t steps = 0;
    out.solution = svrg_epoch(b, cfg, out.solution, rhs, rng, &steps, guard);
    ++out.epochs_run;
    out.steps_total += steps;
    out.grad_evals += b.matrix().rows() + steps;
  }
  return out;
}

// f_{gamma,x0}(x) = f(x) + (gamma/2)|x - x0|^2 with per-component regularizer
// weights |a_i|^2/|A|_F^2.
struct RegularizedProblem {
  const ShiftedOperatord* base;
  double gamma;
  VectorXd anchor;  // prox center x0
  VectorXd rhs;

  void validate() const {
    if (gamma < 0) throw ConfigError("RegularizedProblem: gamma must be >= 0");
  }
};

// s_bar_gamma = (gamma^2 + 12 lambda1_hat |A|_F^2) / (lambda - lambda1_hat + gamma),
// strong convexity mu + gamma.
template <typename Scalar>
SvrgConfig svrg_config_regularized(const ShiftedOperator<Scalar>& b,
                                   double lambda1_hat, double gamma) {
  double mu = static_cast<double>(b.shift()) - lambda1_hat;
  if (!(mu > 0)) throw ShiftError("svrg_config_regularized: shift must exceed lambda1_hat");
  double frob = static_cast<double>(b.matrix().frob_sq());
  SvrgConfig cfg;
  cfg.mu = mu + gamma;
  cfg.s_bar = (gamma * gamma + 12.0 * lambda1_hat * frob) / (mu + gamma);
  cfg.eta = 1.0 / (8.0 * cfg.s_bar);
  cfg.m_max = static_cast<std::int64_t>(std::ceil(64.0 * cfg.s_bar / cfg.mu));
  return cfg;
}

// grad psi_i(x) = (lambda|a_i|^2/|A|_F^2) x - a_i a_i^T x - rhs/n
//                 + (gamma|a_i|^2/|A|_F^2)(x - anchor).
template <typename Scalar>
Vector<Scalar> regularized_component_gradient(const RegularizedProblem& p,
                                              std::int64_t i,
                                              const Vector<Scalar>& x) {
  const auto& m = p.base->matrix();
  Vector<Scalar> g = component_gradient(*p.base, i, x, p.rhs);
  g += (p.gamma * m.row_norm_sq(i) / m.frob_sq()) * (x - p.anchor);
  return g;
}

inline VectorXd regularized_svrg_epoch(const RegularizedProblem& p,
                                       const SvrgConfig& cfg, const VectorXd& x0,
                                       Rng& rng, std::int64_t* steps_out = nullptr,
                                       double guard = 0) {
  p.validate();
  return detail::epoch_body(*p.base, cfg, x0, p.rhs, p.gamma, &p.anchor, rng,
                            steps_out, guard);
}

struct AccelConfig {
  double lambda1_hat = 0;
  double gamma_scale = 1.0;  // multiplies sqrt(d*lambda1_hat*|A|_F^2/nnz)
  double gap_hint = 0;       // 0: derive min(1, 100*mu/lambda1_hat)
  int inner_epochs = 0;      // 0: ceil(log2(4((2g+mu)/mu)^1.5)), capped at 60
  double outer_scale = 1.0;
  std::int64_t max_grad_evals = std::numeric_limits<std::int64_t>::max();
};

// gamma = gamma_scale * sqrt(d * lambda1_hat * |A|_F^2 / nnz(A)), clamped to
// >= 2 mu (the acceleration lemma needs gamma > 2 mu).
inline double accelerated_gamma(const ShiftedOperatord& b, const AccelConfig& acfg) {
  double mu = b.shift() - acfg.lambda1_hat;
  double raw = acfg.gamma_scale *
               std::sqrt(static_cast<double>(b.matrix().dim()) * acfg.lambda1_hat *
                         static_cast<double>(b.matrix().frob_sq()) /
                         static_cast<double>(b.matrix().nnz()));
  return std::max(raw, 2.0 * mu);
}

// Accelerated proximal-point outer loop over gamma-regularized SVRG solves:
// repeatedly minimize f_{gamma,y} to relative accuracy, then take the
// momentum step y = x + beta (x - x_prev). Falls back to the plain chained
// solver outside the intended regime nnz(A) <= d*sr(A)/gap^2.
inline SolveOutcome accelerated_solve(const ShiftedOperatord& b, const VectorXd& rhs,
                                      const VectorXd& x0, double target_ratio,
                                      const AccelConfig& acfg, Rng& rng) {
  if (!(target_ratio > 0) || target_ratio > 1)
    throw ConfigError("accelerated_solve: target_ratio must be in (0, 1]");
  SolveOutcome out;
  out.solution = x0;
  if (target_ratio == 1.0) return out;

  const auto& m = b.matrix();
  double lam1 = acfg.lambda1_hat;
  double mu = b.shift() - lam1;
  if (!(mu > 0)) throw ShiftError("accelerated_solve: shift must exceed lambda1_hat");
  double frob = m.frob_sq();
  double nnz = static_cast<double>(m.nnz());

  double ghat = acfg.gap_hint > 0 ? acfg.gap_hint : std::min(1.0, 100.0 * mu / lam1);
  double regime = static_cast<double>(m.dim()) * (frob / lam1) / (ghat * ghat);
  if (nnz > regime) {
    SvrgConfig cfg = svrg_config_for(b, lam1);
    return solve_to_accuracy(b, rhs, x0, target_ratio, cfg, rng);
  }

  double gamma = accelerated_gamma(b, acfg);

  double kappa = (mu + gamma) / mu;
  double beta = (std::sqrt(kappa) - 1.0) / (std::sqrt(kappa) + 1.0);
  int inner = acfg.inner_epochs;
  if (inner <= 0) {
    double c_acc = 4.0 * std::pow((2.0 * gamma + mu) / mu, 1.5);
    inner = static_cast<int>(std::min(60.0, std::ceil(std::log2(c_acc))));
  }
  auto outer = static_cast<std::int64_t>(
      std::ceil(acfg.outer_scale * (std::sqrt(gamma / mu) + 1.0) *
                std::log(1.0 / target_ratio)) +
      1);

  SvrgConfig cfg = svrg_config_regularized(b, lam1, gamma);
  const double guard = 1e12 * (x0.norm() + rhs.norm() / mu);
  VectorXd x = x0, x_prev = x0, y = x0;
  for (std::int64_t s = 0; s < outer; ++s) {
    RegularizedProblem prob{&b, gamma, y, rhs};
    VectorXd z = x;
    for (int l = 0; l < inner; ++l) {
      std::int64_t steps = 0;
      z = regularized_svrg_epoch(prob, cfg, z, rng, &steps, guard);
      ++out.epochs_run;
      out.steps_total += steps;
      out.grad_evals += m.rows() + steps;
      if (out.grad_evals > acfg.max_grad_evals)
        throw BudgetError("accelerated_solve: gradient budget exceeded after " +
                          std::to_string(s) + " outer iterations");
    }
    x_prev = x;
    x = z;
    y = x + beta * (x - x_prev);
  }
  out.solution = x;
  return out;
}

inline SolveOutcome accelerated_solve(const ShiftedOperatord& b, const VectorXd& rhs,
                                      double target_ratio, const AccelConfig& acfg,
                                      Rng& rng) {
  return accelerated_solve(b, rhs, VectorXd::Zero(b.matrix().dim()), target_ratio,
                           acfg, rng);
}

}  // namespace sieve

#endif  // SIEVE_SVRG_HPP
