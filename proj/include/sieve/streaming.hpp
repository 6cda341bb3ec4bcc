// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIEVE_STREAMING_HPP
#define SIEVE_STREAMING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "sieve/power.hpp"

namespace sieve {

// Online pipeline over an i.i.d. sample oracle: streaming SVRG solves of
// B x = c with B = lambda I - E[a a^T], median-of-means Rayleigh estimation,
// and the online warm-start driver. All state is O(d); every draw is counted.

// Ground truth reported by synthetic oracles.
struct StreamTruth {
  double lambda1 = 0;
  double lambda2 = 0;
  double gap = 0;
  double var = 0;  // v(D) = |E[(aa^T)^2]|_2 / lambda1^2
  VectorXd v1;
  MatrixXd sigma;
};

class SampleOracle {
 public:
  virtual ~SampleOracle() = default;
  virtual Eigen::Index dim() const = 0;
  virtual void draw(Rng& rng, VectorXd& out) = 0;
  virtual const StreamTruth* truth() const { return nullptr; }
};

struct StreamBudget {
  std::int64_t samples_used = 0;
  std::int64_t sample_cap = std::numeric_limits<std::int64_t>::max();
};

// Couples an oracle with its budget so no draw escapes accounting.
class SampleStream {
 public:
  SampleStream(SampleOracle& oracle, StreamBudget& budget)
      : oracle_(&oracle), budget_(&budget), buf_(oracle.dim()) {}

  Eigen::Index dim() const { return oracle_->dim(); }
  const StreamTruth* truth() const { return oracle_->truth(); }
  std::int64_t samples_used() const { return budget_->samples_used; }

  const VectorXd& next(Rng& rng) {
    if (budget_->samples_used >= budget_->sample_cap)
      throw BudgetError("sample cap exceeded (" +
                        std::to_string(budget_->sample_cap) + ")");
    ++budget_->samples_used;
    oracle_->draw(rng, buf_);
    return buf_;
  }

 private:
  SampleOracle* oracle_;
  StreamBudget* budget_;
  VectorXd buf_;
};

// Gaussian spike model: a = sqrt(lambda_s) * iota * v_star + Z with
// iota ~ N(0,1), Z ~ N(0, I_d), so E[aa^T] = (1+lambda_s) v* v*^T + (I - v* v*^T)
// and v(D) = (d + 2 + 3 lambda_s) / (1 + lambda_s).
class SpikeModel final : public SampleOracle {
 public:
  SpikeModel(Eigen::Index d, double lambda_s, VectorXd v_star)
      : lambda_s_(lambda_s), sqrt_ls_(std::sqrt(lambda_s)) {
    if (lambda_s < 0) throw ConfigError("SpikeModel: lambda_s must be >= 0");
    if (v_star.size() != d) throw DimensionError("SpikeModel: v_star length");
    v_star.normalize();
    truth_.lambda1 = 1.0 + lambda_s;
    truth_.lambda2 = 1.0;
    truth_.gap = lambda_s / (1.0 + lambda_s);
    truth_.var = (static_cast<double>(d) + 2.0 + 3.0 * lambda_s) / (1.0 + lambda_s);
    truth_.v1 = v_star;
    truth_.sigma = MatrixXd::Identity(d, d) + lambda_s * v_star * v_star.transpose();
  }

  static SpikeModel random_direction(Eigen::Index d, double lambda_s, Rng& rng) {
    VectorXd v(d);
    rng.normal_fill(v);
    return SpikeModel(d, lambda_s, std::move(v));
  }

  Eigen::Index dim() const override { return truth_.v1.size(); }

  void draw(Rng& rng, VectorXd& out) override {
    double iota = rng.normal();
    rng.normal_fill(out);
    out += (sqrt_ls_ * iota) * truth_.v1;
  }

  const StreamTruth* truth() const override { return &truth_; }

 private:
  double lambda_s_, sqrt_ls_;
  StreamTruth truth_;
};

// File-backed stream: newline-delimited dense CSV rows or a binary record
// format (little-endian; u64 dimension header then d-double records).
// One-pass by contract: hitting EOF raises unless multi_epoch was set, which
// rewinds and marks the oracle as non-streaming.
class FileOracle final : public SampleOracle {
 public:
  enum class Format { kCsv, kBinary };

  FileOracle(const std::string& path, Format format, bool multi_epoch = false)
      : path_(path), format_(format), multi_epoch_(multi_epoch),
        in_(path, format == Format::kBinary ? std::ios::binary : std::ios::in) {
    if (!in_) throw Error("FileOracle: cannot open " + path);
    if (format_ == Format::kBinary) {
      std::uint64_t d = 0;
      in_.read(reinterpret_cast<char*>(&d), sizeof(d));
      if (!in_ || d == 0) throw ParseError("FileOracle: bad binary header");
      d_ = static_cast<Eigen::Index>(d);
      data_start_ = in_.tellg();
    } else {
      std::string first;
      if (!std::getline(in_, first))
        throw ParseError("FileOracle: empty stream file", 1);
      d_ = static_cast<Eigen::Index>(std::count(first.begin(), first.end(), ',') + 1);
      in_.clear();
      in_.seekg(0);
      data_start_ = 0;
    }
  }

  Eigen::Index dim() const override { return d_; }
  bool rewound() const { return rewound_; }

  void draw(Rng&, VectorXd& out) override {
    out.resize(d_);
    if (format_ == Format::kBinary) {
      in_.read(reinterpret_cast<char*>(out.data()),
               static_cast<std::streamsize>(sizeof(double) * d_));
      if (!in_) {
        handle_eof();
        in_.read(reinterpret_cast<char*>(out.data()),
                 static_cast<std::streamsize>(sizeof(double) * d_));
        if (!in_) throw ParseError("FileOracle: truncated binary record");
      }
    } else {
      std::string line;
      if (!std::getline(in_, line)) {
        handle_eof();
        if (!std::getline(in_, line))
          throw ParseError("FileOracle: empty stream after rewind");
      }
      ++line_;
      parse_csv_line(line, out);
    }
    for (Eigen::Index i = 0; i < d_; ++i)
      if (!std::isfinite(out[i]))
        throw ParseError("FileOracle: non-finite sample entry", line_);
  }

 private:
  void handle_eof() {
    if (!multi_epoch_)
      throw BudgetError("FileOracle: stream exhausted (one-pass contract); "
                        "pass the multi-epoch flag to allow rewinding");
    rewound_ = true;
    in_.clear();
    in_.seekg(data_start_);
    line_ = 0;
  }

  void parse_csv_line(const std::string& line, VectorXd& out) const {
    std::size_t pos = 0;
    for (Eigen::Index i = 0; i < d_; ++i) {
      std::size_t used = 0;
      try {
        out[i] = std::stod(line.substr(pos), &used);
      } catch (const std::exception&) {
        throw ParseError("FileOracle: bad CSV field " + std::to_string(i + 1), line_);
      }
      pos += used;
      if (i + 1 < d_) {
        pos = line.find(',', pos);
        if (pos == std::string::npos)
          throw ParseError("FileOracle: too few CSV fields", line_);
        ++pos;
      }
    }
  }

  std::string path_;
  Format format_;
  bool multi_epoch_;
  mutable std::ifstream in_;
  Eigen::Index d_ = 0;
  std::streampos data_start_;
  long line_ = 0;
  bool rewound_ = false;
};

inline VectorXd spike_sample(SpikeModel& model, Rng& rng) {
  VectorXd a(model.dim());
  model.draw(rng, a);
  return a;
}

// Median-of-means Rayleigh quotient estimate: k = ceil(4 var_hint / eps^2)
// samples per batch, m = ceil(18 ln(1/p)) batches, batch means of (x^T a)^2,
// median over batches. |z - x^T Sigma x| <= eps * lambda1 w.p. >= 1 - p.
inline double estimate_rayleigh(SampleStream& stream, const VectorXd& x,
                                double epsilon, double p, double var_hint,
                                Rng& rng) {
  if (!(epsilon > 0) || epsilon > 1)
    throw ConfigError("estimate_rayleigh: epsilon must be in (0,1]");
  if (!(p > 0) || !(p < 1)) throw ConfigError("estimate_rayleigh: p must be in (0,1)");
  if (!(var_hint > 0)) throw ConfigError("estimate_rayleigh: var_hint must be positive");
  auto k = static_cast<std::int64_t>(std::ceil(4.0 * var_hint / (epsilon * epsilon)));
  auto batches = static_cast<std::int64_t>(std::ceil(18.0 * std::log(1.0 / p)));
  std::vector<double> r(batches);
  for (std::int64_t j = 0; j < batches; ++j) {
    double acc = 0;
    for (std::int64_t i = 0; i < k; ++i) {
      double w = x.dot(stream.next(rng));
      acc += w * w;
    }
    r[j] = acc / static_cast<double>(k);
  }
  auto mid = r.begin() + batches / 2;
  std::nth_element(r.begin(), mid, r.end());
  return *mid;
}

// Number of length-d working vectors a streaming step keeps live
// (anchor gradient, displacement, sample buffer, start point).
inline constexpr int kStreamingStepBuffers = 4;

// One streaming SVRG step on f(x) = E[psi_a(x)],
// psi_a(x) = 1/2 x^T (lambda I - a a^T) x - rhs^T x: k fresh samples form the
// anchor gradient at x0, then m~ ~ U{1..m} corrected stochastic steps with one
// fresh sample each. eta is the effective step (the analysis' eta/L).
inline VectorXd streaming_svrg_step(SampleStream& stream, double lambda,
                                    const VectorXd& rhs, const VectorXd& x0,
                                    double eta, std::int64_t k, std::int64_t m,
                                    Rng& rng) {
  if (!(eta > 0) || k < 1 || m < 1)
    throw ConfigError("streaming_svrg_step: parameters must be positive");
  const Eigen::Index d = stream.dim();
  if (x0.size() != d || rhs.size() != d)
    throw DimensionError("streaming_svrg_step: length mismatch");

  VectorXd ghat = VectorXd::Zero(d);
  for (std::int64_t i = 0; i < k; ++i) {
    const VectorXd& a = stream.next(rng);
    ghat += a * (a.dot(x0));
  }
  ghat = lambda * x0 - ghat / static_cast<double>(k) - rhs;

  auto mt = 1 + static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(m)));
  const double decay = 1.0 - eta * lambda;
  const double guard = 1e12 * (x0.norm() + rhs.norm() + 1.0) / std::min(1.0, eta * lambda);
  VectorXd delta = VectorXd::Zero(d);
  for (std::int64_t t = 0; t < mt; ++t) {
    const VectorXd& a = stream.next(rng);
    double w = a.dot(delta);
    delta = decay * delta - eta * ghat;
    delta += (eta * w) * a;
    if ((t & 255) == 255 || t + 1 == mt) {
      if (!delta.allFinite() || delta.norm() > guard) {
        VectorXd last = x0 + delta;
        if (!last.allFinite()) last = x0;
        throw DivergedError("streaming_svrg_step diverged", std::move(last));
      }
    }
  }
  return x0 + delta;
}

struct StreamingSolveConfig {
  double c2 = 1.0 / 44.0;
  double c3_seed = 1.0 / 20.0;
  double lambda1_hat = 0;  // required
  double var_hint = 0;     // required (v(D) bound)

  void validate() const {
    if (!(c2 > 0) || !(c2 < 1) || !(c3_seed > 0) || !(c3_seed < 1))
      throw ConfigError("StreamingSolveConfig: c2, c3 must be in (0,1)");
    if (!(lambda1_hat > 0) || !(var_hint > 0))
      throw ConfigError("StreamingSolveConfig: lambda1_hat and var_hint required");
  }
};

// Streaming solver for B x = rhs with unit rhs, no initial point: starts at 0
// and chains streaming steps with eta = c2/(8 S), m = ceil(S/(mu c2^2)),
// k_j = max(ceil(S/(mu c2)), ceil(v lambda1^2/(mu^2 c3_j))), c3_1 = c3_seed
// and c3 halving each repetition (its 1/c3 cost doubles) until it reaches
// c3 = c, plus one confirming repetition at the floor. The c3 term's target
// is the absolute tail 10c, so c3 below c buys nothing.
// Contract: E|x - x*|_B^2 <= 10 c lambda1(B^{-1}).
inline VectorXd streaming_solve(SampleStream& stream, double lambda,
                                const VectorXd& rhs_unit, double c,
                                const StreamingSolveConfig& cfg, Rng& rng) {
  cfg.validate();
  if (!(c > 0) || c > 1) throw ConfigError("streaming_solve: c must be in (0,1]");
  if (std::abs(rhs_unit.norm() - 1.0) > 1e-9)
    throw ConfigError("streaming_solve: rhs must be a unit vector");
  double mu = lambda - cfg.lambda1_hat;
  if (!(mu > 0)) throw ShiftError("streaming_solve: lambda must exceed lambda1_hat");

  double s_bar = lambda + cfg.var_hint * cfg.lambda1_hat * cfg.lambda1_hat / mu;
  double eta = cfg.c2 / (8.0 * s_bar);
  auto m = static_cast<std::int64_t>(std::ceil(s_bar / (mu * cfg.c2 * cfg.c2)));
  auto k_smooth = static_cast<std::int64_t>(std::ceil(s_bar / (mu * cfg.c2)));
  double var_term = cfg.var_hint * cfg.lambda1_hat * cfg.lambda1_hat / (mu * mu);

  std::int64_t reps = 1;
  if (cfg.c3_seed > c)
    reps = 2 + static_cast<std::int64_t>(std::ceil(std::log2(cfg.c3_seed / c)));
  VectorXd x = VectorXd::Zero(stream.dim());
  double c3 = cfg.c3_seed;
  for (std::int64_t j = 0; j < reps; ++j) {
    double c3_eff = std::max(c3, c);
    auto k = std::max(k_smooth,
                      static_cast<std::int64_t>(std::ceil(var_term / c3_eff)));
    x = streaming_svrg_step(stream, lambda, rhs_unit, x, eta, k, m, rng);
    c3 *= 0.5;
  }
  return x;
}

struct OnlineConfig {
  double lambda = 0;       // shift (caller-supplied; warm-start framing)
  double lambda1_hat = 0;  // estimate with lambda - lambda1_hat <= lambda - lambda1
  double var_hint = 0;     // 0: take v(D) from the oracle's ground truth
  double gap_hint = 0;     // 0: take from ground truth; guards the eps < gap regime
  std::int64_t sample_cap = std::numeric_limits<std::int64_t>::max();
  double c2 = 0.125;
  // pre-floor pacing: c(i) = max(c_scale * c1(i)^2, eps*lambda1_hat/(mu*c_floor_div))
  double c_scale = 0.125;
  double c_floor_div = 60.0;
  // online quotient-estimate tolerance: max(mu/30, quot_tol_scale*gap*lambda1)
  double quot_tol_scale = 0.25;
  double rq_fail_budget = 0;  // per-round p; 0: 1/(4 * rounds)
  int extra_rounds = 1;       // rounds past the first floor-accuracy round
  std::function<void(const RoundEvent&)> observer;
};

// Online warm-start refinement: warm-start rounds with c1(i) = (1/sqrt(10)) 5^{-i},
// per-round streaming solves at c(i) = c_scale c1(i)^2 floored at
// eps lambda1 / (mu c_floor_div)  (= Theta(c1^2) with c1 halted at
// Theta(sqrt(eps lambda1/mu)), the point where the quotient error reaches
// eps lambda1), and median-of-means quotient tests. Returns x with
// x^T Sigma x >= (1-eps) lambda1 with constant probability; O(d) state;
// every sample counted.
inline SolveReport online_refine(SampleStream& stream, const VectorXd& x0,
                                 double epsilon, const OnlineConfig& cfg, Rng& rng) {
  SolveReport rep;
  if (!(epsilon > 0) || !(epsilon < 1))
    throw ConfigError("online_refine: epsilon must be in (0,1)");
  double var = cfg.var_hint;
  double gap = cfg.gap_hint;
  if ((var <= 0 || gap <= 0) && stream.truth() == nullptr)
    throw ConfigError("online_refine: var_hint and gap_hint required for "
                      "oracles without ground truth");
  if (var <= 0) var = stream.truth()->var;
  if (gap <= 0) gap = stream.truth()->gap;
  if (epsilon >= gap)
    throw ConfigError("online_refine: epsilon >= gap; use the gap-free driver "
                      "(the online analysis needs epsilon < gap)");
  double mu = cfg.lambda - cfg.lambda1_hat;
  if (!(mu > 0)) throw ShiftError("online_refine: lambda must exceed lambda1_hat");

  const double c_min =
      std::min(0.5, epsilon * cfg.lambda1_hat / (mu * cfg.c_floor_div));
  auto c_of = [&](int i) {
    double c1 = (1.0 / std::sqrt(10.0)) * std::pow(5.0, -i);
    return std::min(0.5, std::max(cfg.c_scale * c1 * c1, c_min));
  };
  int floor_round = 1;
  while (c_of(floor_round) > c_min && floor_round < 64) ++floor_round;
  int rounds = floor_round + cfg.extra_rounds;

  double rq_tol_abs = std::max(mu / 30.0, cfg.quot_tol_scale * gap * cfg.lambda1_hat);
  double rq_eps = std::min(1.0, rq_tol_abs / cfg.lambda1_hat);
  double rq_p = cfg.rq_fail_budget > 0 ? cfg.rq_fail_budget : 1.0 / (4.0 * rounds);

  StreamingSolveConfig scfg;
  scfg.c2 = cfg.c2;
  scfg.lambda1_hat = cfg.lambda1_hat;
  scfg.var_hint = var;

  PowerState st;
  st.x = x0.normalized();
  st.lambda = cfg.lambda;
  st.lambda1_hat = cfg.lambda1_hat;
  st.phase = Phase::kWarmStart;

  rep.lambda_bar = cfg.lambda;
  rep.lambda1_hat = cfg.lambda1_hat;
  rep.mu_hat = mu;

  double last_quot = std::numeric_limits<double>::quiet_NaN();
  try {
    for (int i = 1; i <= rounds; ++i) {
      double c = c_of(i);
      RoundSolver solver = [&](const VectorXd& x, Rng& r) {
        return streaming_solve(stream, cfg.lambda, x, c, scfg, r);
      };
      QuotEstimator quot = [&](const VectorXd& x) {
        VectorXd u = x.normalized();
        return estimate_rayleigh(stream, u, rq_eps, rq_p, var, rng);
      };
      int acc_before = st.accepted;
      st = warm_start_round(st, solver, quot, rng);
      if (cfg.observer || i == rounds)
        last_quot = estimate_rayleigh(stream, st.x, rq_eps, rq_p, var, rng);
      if (cfg.observer)
        cfg.observer(RoundEvent{st.round, Phase::kWarmStart, last_quot,
                                stream.samples_used(), st.accepted > acc_before,
                                &st.x});
    }
  } catch (const BudgetError&) {
    rep.status = "budget";
  }

  rep.x = st.x;
  rep.quotient = last_quot;
  rep.warm_rounds = st.round;
  rep.accepted = st.accepted;
  rep.rejected = st.rejected;
  rep.samples_used = stream.samples_used();
  return rep;
}

// Pilot estimate of v(D) = |E |a|^2 a a^T|_2 / lambda1^2 from 10 d draws:
// power iteration on the empirical fourth-moment operator and the empirical
// covariance. Utility for file-backed streams without a configured hint.
inline double estimate_var_hint(SampleStream& stream, Rng& rng) {
  const Eigen::Index d = stream.dim();
  const std::int64_t n = 10 * static_cast<std::int64_t>(d);
  std::vector<VectorXd> pilot;
  pilot.reserve(n);
  for (std::int64_t i = 0; i < n; ++i) pilot.push_back(stream.next(rng));

  auto power_top = [&](bool fourth) {
    VectorXd z(d);
    rng.normal_fill(z);
    z.normalize();
    double lam = 0;
    for (int it = 0; it < 50; ++it) {
      VectorXd y = VectorXd::Zero(d);
      for (const auto& a : pilot) {
        double w = a.dot(z);
        y += (fourth ? a.squaredNorm() * w : w) * a;
      }
      y /= static_cast<double>(n);
      lam = z.dot(y);
      double ny = y.norm();
      if (ny == 0) break;
      z = y / ny;
    }
    return lam;
  };

  double lam1 = power_top(false);
  double m4 = power_top(true);
  return m4 / (lam1 * lam1);
}

// Pilot (lambda, lambda1_hat) for the online driver when the caller has no
// warm-start parameters: top-two eigenvalues of the empirical covariance of a
// pilot batch, shifted to the top of the contract range lambda1 (1 + gap/8).
struct PilotShift {
  double lambda = 0;
  double lambda1_hat = 0;
  double gap_hat = 0;
  VectorXd x0;  // pilot covariance top Ritz vector (warm start candidate)
};

inline PilotShift pilot_shift_estimate(SampleStream& stream, std::int64_t pilot_n,
                                       Rng& rng) {
  const Eigen::Index d = stream.dim();
  std::vector<VectorXd> pilot;
  pilot.reserve(pilot_n);
  for (std::int64_t i = 0; i < pilot_n; ++i) pilot.push_back(stream.next(rng));
  OperatorFn cov = [&](const VectorXd& z) {
    VectorXd y = VectorXd::Zero(d);
    for (const auto& a : pilot) y += a.dot(z) * a;
    return VectorXd(y / static_cast<double>(pilot_n));
  };
  EigEstimatePair p = eig_estimate(cov, d, 64, rng);
  PilotShift out;
  out.lambda1_hat = p.tilde_lambda1;
  out.gap_hat = std::max(1e-6, (p.tilde_lambda1 - p.tilde_lambda2) / p.tilde_lambda1);
  out.lambda = p.tilde_lambda1 * (1.0 + out.gap_hat / 8.0);
  out.x0 = random_init(d, rng);
  for (int it = 0; it < 100; ++it) out.x0 = cov(out.x0).normalized();
  return out;
}

}  // namespace sieve

#endif  // SIEVE_STREAMING_HPP
