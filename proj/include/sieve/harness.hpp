// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIEVE_HARNESS_HPP
#define SIEVE_HARNESS_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sieve/streaming.hpp"

namespace sieve {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct RunConfig {
  std::string mode = "offline";  // offline|online|gap-free|estimate-shift
  std::string input_path;
  std::string synthetic;  // spike:... | diag:... | random:...
  double epsilon = 1e-6;
  std::uint64_t seed = 0;
  int trials = 1;
  std::string solver = "svrg";  // svrg|accelerated|exact-dense
  std::string estimation_solver;  // empty: same as solver
  std::string out_path;
  std::string trace_path;
  double alpha = 150;
  double gap_floor = 1e-4;
  std::int64_t sample_cap = std::numeric_limits<std::int64_t>::max();
  double var_hint = 0;
  bool stream_input = false;  // online mode over a matrix file needs this
  bool multi_epoch = false;
  int baseline_iters = 0;
  int threads = 0;  // trial work pool size; 0 = hardware
  // online overrides (0 = pilot-estimate / ground truth)
  double online_lambda = 0;
  double online_lambda1_hat = 0;
  double online_gap_hint = 0;

  void validate() const;
};

struct TrialRecord {
  double quotient = std::numeric_limits<double>::quiet_NaN();
  double v1_dot = std::numeric_limits<double>::quiet_NaN();  // NaN if truth unknown
  bool success = false;
  int rounds = 0;
  int burn_rounds = 0;
  int accepted = 0;
  int rejected = 0;
  std::int64_t grad_evals = 0;
  std::int64_t samples_used = 0;
  std::string status = "ok";
  // estimate-shift mode
  double lambda_bar = std::numeric_limits<double>::quiet_NaN();
  double lam1_tilde = std::numeric_limits<double>::quiet_NaN();
  double lam2_tilde = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
};

struct RunReport {
  RunConfig config;
  std::vector<TrialRecord> trials;
  // theory parameters from trial 0
  double lambda_bar = std::numeric_limits<double>::quiet_NaN();
  double lambda1_hat = std::numeric_limits<double>::quiet_NaN();
  double mu_hat = std::numeric_limits<double>::quiet_NaN();
  double s_bar = std::numeric_limits<double>::quiet_NaN();
  double eta = std::numeric_limits<double>::quiet_NaN();
  std::int64_t m_max = 0;
  // ground truth when available (synthetic / small dense)
  double truth_lambda1 = std::numeric_limits<double>::quiet_NaN();
  double truth_gap = std::numeric_limits<double>::quiet_NaN();
  // baseline fragment (offline, when requested)
  double baseline_quotient = std::numeric_limits<double>::quiet_NaN();
  std::int64_t baseline_matvec_rows = 0;
  // timing is serialized into a separate object and excluded from
  // byte-identity comparisons
  double total_seconds = 0;
  std::vector<double> trial_seconds;

  double success_rate() const;
  nlohmann::ordered_json to_json() const;  // deterministic except "timing"
  void write(const std::string& path) const;
};

// Classic power method on Sigma with per-round normalization; comparison
// baseline for traces and the report.
struct BaselineResult {
  VectorXd x;
  double quotient = 0;
  std::vector<double> quotient_trace;
  std::int64_t matvec_rows = 0;  // rows touched (2 row passes per iteration)
};
BaselineResult baseline_power_method(const RowMatrixd& m, int iters, Rng& rng,
                                     const VectorXd* x0 = nullptr);

// Basic Oja iteration over a sample stream (diagnostic baseline only).
BaselineResult oja_baseline(SampleStream& stream, std::int64_t samples,
                            double eta_scale, Rng& rng);

// Newline-delimited JSON trace: a versioned header line then one event per
// round. The G column is present iff the exact-dense oracle is enabled.
class TraceWriter {
 public:
  TraceWriter(const std::string& path, const std::string& mode, bool g_column);
  ~TraceWriter();
  void event(int trial, const RoundEvent& ev, std::optional<double> g);
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Replays a trace against a report; throws Error on mismatch.
void verify_trace(const std::string& trace_path, const std::string& report_path);

// Synthetic inputs --------------------------------------------------------

struct SyntheticSpec {
  std::string kind;  // spike|diag|random
  Eigen::Index d = 0;
  double lambda_s = 1.0;           // spike
  std::vector<double> spectrum;    // diag
  Eigen::Index n = 0;              // random (0: n = d)
  double density = 1.0;            // random
  double gap = 0.1;                // random
};

SyntheticSpec parse_synthetic(const std::string& spec);

// Planted-spectrum instance: eigenvalues {1, 1-gap, geometric decay}, random
// orthogonal basis, A = D^{1/2} Q^T with n = d rows (optionally re-sampled to
// n != d, importance-weighted so A^T A keeps the planted spectrum in
// expectation).
RowMatrixd make_planted(Eigen::Index n, Eigen::Index d, double density, double gap,
                        Rng& rng);

RowMatrixd make_diag_spectrum(const std::vector<double>& eigenvalues);

RunReport run(const RunConfig& config);

}  // namespace sieve

#endif  // SIEVE_HARNESS_HPP
