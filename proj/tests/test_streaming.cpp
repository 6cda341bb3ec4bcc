// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "sieve/streaming.hpp"
#include "test_support.hpp"

using namespace sieve;

namespace {

class PointMassOracle final : public SampleOracle {
 public:
  explicit PointMassOracle(VectorXd a) : a_(std::move(a)) {}
  Eigen::Index dim() const override { return a_.size(); }
  void draw(Rng&, VectorXd& out) override { out = a_; }

 private:
  VectorXd a_;
};

MatrixXd dense_b(const StreamTruth& truth, double lambda) {
  MatrixXd b = -truth.sigma;
  b.diagonal().array() += lambda;
  return b;
}

}  // namespace

TEST_CASE("spike model moments: lambda_s = 0 gives an isotropic covariance") {
  const Eigen::Index d = 10;
  Rng dir(1);
  SpikeModel model = SpikeModel::random_direction(d, 0.0, dir);
  Rng rng(2);
  const int n = 100000;
  MatrixXd cov = MatrixXd::Zero(d, d);
  VectorXd a(d);
  for (int i = 0; i < n; ++i) {
    model.draw(rng, a);
    cov += a * a.transpose();
  }
  cov /= n;
  cov -= MatrixXd::Identity(d, d);
  CHECK(cov.norm() <= 3.0 * d / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("spike model concentrates (1 + lambda_s) along the spike") {
  const Eigen::Index d = 12;
  const double ls = 1.5;
  Rng dir(3);
  SpikeModel model = SpikeModel::random_direction(d, ls, dir);
  const VectorXd v = model.truth()->v1;
  Rng rng(4);
  const int n = 100000;
  double acc = 0;
  VectorXd a(d);
  for (int i = 0; i < n; ++i) {
    model.draw(rng, a);
    double w = v.dot(a);
    acc += w * w;
  }
  acc /= n;
  double se = (1.0 + ls) * std::sqrt(2.0 / n);
  CHECK(std::abs(acc - (1.0 + ls)) <= 5 * se);
}

TEST_CASE("spike model v(D) matches (d + 2 + 3 lambda_s)/(1 + lambda_s)") {
  const Eigen::Index d = 8;
  const double ls = 1.0;
  Rng dir(5);
  SpikeModel model = SpikeModel::random_direction(d, ls, dir);
  Rng rng(6);
  const int n = 200000;
  MatrixXd m4 = MatrixXd::Zero(d, d);
  VectorXd a(d);
  for (int i = 0; i < n; ++i) {
    model.draw(rng, a);
    m4 += a.squaredNorm() * (a * a.transpose());
  }
  m4 /= n;
  double top = DenseSpectrumd(m4).lambda1();
  double vd = top / std::pow(model.truth()->lambda1, 2);
  CHECK(vd == doctest::Approx(model.truth()->var).epsilon(0.05));
}

TEST_CASE("spike_sample wraps draw") {
  Rng dir(7);
  SpikeModel model = SpikeModel::random_direction(5, 2.0, dir);
  Rng r1(8), r2(8);
  VectorXd via_draw(5);
  model.draw(r1, via_draw);
  CHECK(spike_sample(model, r2) == via_draw);
}

TEST_CASE("estimate_rayleigh is exact on a point mass and counts k*m samples") {
  VectorXd a(4);
  a << 1.0, -2.0, 0.5, 0.25;
  PointMassOracle oracle(a);
  StreamBudget budget;
  SampleStream stream(oracle, budget);
  Rng rng(9);
  VectorXd x(4);
  rng.normal_fill(x);
  x.normalize();
  const double eps = 0.2;
  const double p = std::exp(-1.0);  // m = 18 batches
  double z = estimate_rayleigh(stream, x, eps, p, 80.0, rng);
  double expect = std::pow(x.dot(a), 2);
  CHECK(z == doctest::Approx(expect).epsilon(1e-12));
  // k = ceil(4 * 80 / 0.04) = 8000 per batch
  CHECK(budget.samples_used == 8000 * 18);
}

TEST_CASE("estimate_rayleigh hits its tolerance on the spike model") {
  const Eigen::Index d = 20;
  Rng dir(10);
  SpikeModel model = SpikeModel::random_direction(d, 1.0, dir);
  const double eps = 0.2, p = 0.05;
  int ok = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    StreamBudget budget;
    SampleStream stream(model, budget);
    Rng rng(100 + t);
    double z = estimate_rayleigh(stream, model.truth()->v1, eps, p,
                                 model.truth()->var, rng);
    if (std::abs(z - 2.0) <= eps * model.truth()->lambda1) ++ok;
  }
  CHECK(ok >= static_cast<int>(0.90 * trials));
}

TEST_CASE("sample cap failures are clean") {
  VectorXd a = VectorXd::Ones(3);
  PointMassOracle oracle(a);
  StreamBudget budget;
  budget.sample_cap = 10;
  SampleStream stream(oracle, budget);
  Rng rng(11);
  CHECK_THROWS_AS(
      (void)estimate_rayleigh(stream, VectorXd(a.normalized()), 1.0, 0.5, 1.0, rng),
      BudgetError);
  CHECK(budget.samples_used == 10);
}

TEST_CASE("streaming step on a point mass is deterministic gradient descent") {
  // point mass at a: Sigma = a a^T exactly, psi_a is the only component
  VectorXd a(5);
  a << 0.9, -0.4, 0.3, 0.1, -0.2;
  PointMassOracle oracle(a);
  const double lambda = 2.0 * a.squaredNorm();
  MatrixXd bmat = lambda * MatrixXd::Identity(5, 5) - a * a.transpose();

  Rng rng(12);
  VectorXd xstar(5);
  rng.normal_fill(xstar);
  VectorXd rhs = bmat * xstar;
  VectorXd x0(5);
  rng.normal_fill(x0);

  StreamBudget budget;
  SampleStream stream(oracle, budget);
  const double eta = 0.1 / lambda;
  const std::int64_t k = 3, mcap = 64;
  Rng step_rng(13);
  VectorXd got = streaming_svrg_step(stream, lambda, rhs, x0, eta, k, mcap,
                                     step_rng);
  auto mt = budget.samples_used - k;
  // closed form: x_{t+1} - x* = (I - eta B)(x_t - x*)
  MatrixXd prop = MatrixXd::Identity(5, 5) - eta * bmat;
  VectorXd expect = x0;
  for (std::int64_t t = 0; t < mt; ++t)
    expect = xstar + prop * (expect - xstar);
  CHECK(got.isApprox(expect, 1e-12));
  CHECK((got - xstar).norm() <
        (x0 - xstar).norm());  // geometric descent kicked in
}

TEST_CASE("epoch length draw is uniform on {1..m} (chi-square at 1%)") {
  VectorXd a = VectorXd::Ones(2);
  PointMassOracle oracle(a);
  const std::int64_t k = 1, m = 8;
  std::vector<std::int64_t> counts(m, 0);
  Rng root(14);
  const int calls = 100000;
  for (int c = 0; c < calls; ++c) {
    StreamBudget budget;
    SampleStream stream(oracle, budget);
    Rng rng = root.substream(c);
    streaming_svrg_step(stream, 5.0, VectorXd(VectorXd::Zero(2)),
                        VectorXd(VectorXd::Zero(2)), 0.01, k, m, rng);
    ++counts[budget.samples_used - k - 1];
  }
  double chi2 = 0;
  double expect = static_cast<double>(calls) / m;
  for (auto c : counts) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 18.475);  // chi-square 0.99 quantile, 7 dof
}

TEST_CASE("streaming step workspace is four length-d vectors") {
  // structural bound used by the O(d)-memory claim
  static_assert(kStreamingStepBuffers == 4);
  CHECK(kStreamingStepBuffers == 4);
}

TEST_CASE("streaming solve config carries the corollary seed constants") {
  StreamingSolveConfig cfg;
  CHECK(cfg.c2 == doctest::Approx(1.0 / 44.0));
  CHECK(cfg.c3_seed == doctest::Approx(1.0 / 20.0));
}

TEST_CASE("streaming solve meets its absolute error contract on the spike") {
  const Eigen::Index d = 20;
  Rng dir(15);
  SpikeModel model = SpikeModel::random_direction(d, 1.0, dir);
  const StreamTruth& truth = *model.truth();
  const double lambda = 1.25 * truth.lambda1;
  MatrixXd bmat = dense_b(truth, lambda);
  Eigen::LDLT<MatrixXd> ldlt(bmat);
  const double lam1_binv = 1.0 / (lambda - truth.lambda1);

  StreamingSolveConfig cfg;
  cfg.lambda1_hat = truth.lambda1;
  cfg.var_hint = truth.var;

  Rng root(16);
  VectorXd rhs(d);
  root.normal_fill(rhs);
  rhs.normalize();
  VectorXd xstar = ldlt.solve(rhs);

  auto run_mean = [&](double c, int seeds) {
    double mean = 0;
    for (int s = 0; s < seeds; ++s) {
      StreamBudget budget;
      SampleStream stream(model, budget);
      Rng rng = root.substream(s);
      VectorXd x = streaming_solve(stream, lambda, rhs, c, cfg, rng);
      VectorXd diff = x - xstar;
      mean += diff.dot(bmat * diff) / lam1_binv;
    }
    return mean / seeds;
  };

  CHECK(run_mean(0.1, 40) <= 1.2);   // 10c with sampling slack
  CHECK(run_mean(1.0, 40) <= 0.5);   // single repetition
}

TEST_CASE("online refinement succeeds from a synthetic warm start (small)") {
  const Eigen::Index d = 20;
  const double ls = 1.0, eps = 0.05;
  Rng dir(17);
  SpikeModel model = SpikeModel::random_direction(d, ls, dir);
  const StreamTruth& truth = *model.truth();

  OnlineConfig cfg;
  cfg.lambda1_hat = truth.lambda1;
  cfg.lambda = truth.lambda1 * (1.0 + truth.gap / 8.0);

  int ok = 0;
  const int seeds = 12;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(500 + s);
    VectorXd u(d);
    rng.normal_fill(u);
    u -= truth.v1.dot(u) * truth.v1;
    u.normalize();
    VectorXd x0 = (truth.v1 + 0.3 * u).normalized();
    StreamBudget budget;
    SampleStream stream(model, budget);
    SolveReport rep = online_refine(stream, x0, eps, cfg, rng);
    VectorXd xn = rep.x.normalized();
    double q = xn.dot(truth.sigma * xn);
    if (rep.status == "ok" && q >= (1.0 - eps) * truth.lambda1) ++ok;
    CHECK(rep.samples_used == budget.samples_used);
  }
  CHECK(ok >= 2 * seeds / 3);
}

TEST_CASE("online refinement guards the epsilon < gap regime") {
  Rng dir(18);
  SpikeModel model = SpikeModel::random_direction(10, 1.0, dir);  // gap = 1/2
  StreamBudget budget;
  SampleStream stream(model, budget);
  OnlineConfig cfg;
  cfg.lambda1_hat = 2.0;
  cfg.lambda = 2.1;
  Rng rng(19);
  VectorXd x0 = model.truth()->v1;
  CHECK_THROWS_AS((void)online_refine(stream, x0, 0.6, cfg, rng), ConfigError);
}

TEST_CASE("online refinement is bit-reproducible given (seed, config)") {
  const Eigen::Index d = 10;
  Rng dir(20);
  SpikeModel model = SpikeModel::random_direction(d, 1.0, dir);
  OnlineConfig cfg;
  cfg.lambda1_hat = model.truth()->lambda1;
  cfg.lambda = cfg.lambda1_hat * (1.0 + model.truth()->gap / 8.0);
  auto once = [&](std::uint64_t seed) {
    StreamBudget budget;
    SampleStream stream(model, budget);
    Rng rng(seed);
    VectorXd x0 = model.truth()->v1;
    return online_refine(stream, x0, 0.05, cfg, rng);
  };
  SolveReport r1 = once(77), r2 = once(77), r3 = once(78);
  CHECK(r1.x == r2.x);
  CHECK(r1.samples_used == r2.samples_used);
  CHECK(r1.quotient == r2.quotient);
  bool same = (r1.samples_used == r3.samples_used) && (r1.x == r3.x);
  CHECK_FALSE(same);
}

TEST_CASE("online budget exhaustion returns a partial report") {
  Rng dir(21);
  SpikeModel model = SpikeModel::random_direction(10, 1.0, dir);
  OnlineConfig cfg;
  cfg.lambda1_hat = model.truth()->lambda1;
  cfg.lambda = cfg.lambda1_hat * (1.0 + model.truth()->gap / 8.0);
  StreamBudget budget;
  budget.sample_cap = 5000;
  SampleStream stream(model, budget);
  Rng rng(22);
  VectorXd x0 = model.truth()->v1;
  SolveReport rep = online_refine(stream, x0, 0.05, cfg, rng);
  CHECK(rep.status == "budget");
  CHECK(rep.samples_used == 5000);
  CHECK(rep.x.size() == 10);
}

TEST_CASE("streaming smoothness bound (Monte Carlo)") {
  const Eigen::Index d = 8;
  Rng dir(23);
  SpikeModel model = SpikeModel::random_direction(d, 1.0, dir);
  const StreamTruth& truth = *model.truth();
  const double lambda = 1.3 * truth.lambda1;
  const double mu = lambda - truth.lambda1;
  const double s_bar = lambda + truth.var * truth.lambda1 * truth.lambda1 / mu;
  MatrixXd bmat = dense_b(truth, lambda);

  Rng rng(24);
  VectorXd rhs(d);
  rng.normal_fill(rhs);
  VectorXd xstar = Eigen::LDLT<MatrixXd>(bmat).solve(rhs);
  auto fval = [&](const VectorXd& x) {
    return 0.5 * x.dot(bmat * x) - rhs.dot(x);
  };
  const int mc = 20000;
  VectorXd a(d);
  for (int t = 0; t < 50; ++t) {
    VectorXd x(d);
    rng.normal_fill(x);
    VectorXd delta = x - xstar;
    double mean = 0, sq = 0;
    for (int i = 0; i < mc; ++i) {
      model.draw(rng, a);
      double z = (lambda * delta - a * (a.dot(delta))).squaredNorm();
      mean += z;
      sq += z * z;
    }
    mean /= mc;
    sq /= mc;
    double se = std::sqrt(std::max(0.0, sq - mean * mean) / mc);
    double bound = 2.0 * s_bar * (fval(x) - fval(xstar));
    CHECK(mean <= bound + 3 * se);
  }
}

TEST_CASE("streaming variance bound (Monte Carlo)") {
  const Eigen::Index d = 8;
  Rng dir(25);
  SpikeModel model = SpikeModel::random_direction(d, 1.0, dir);
  const StreamTruth& truth = *model.truth();
  const double lambda = 1.2 * truth.lambda1;
  const double mu = lambda - truth.lambda1;
  MatrixXd bmat = dense_b(truth, lambda);
  Eigen::LDLT<MatrixXd> ldlt(bmat);

  Rng rng(26);
  VectorXd rhs(d);
  rng.normal_fill(rhs);
  rhs.normalize();
  VectorXd xstar = ldlt.solve(rhs);
  double sigma2 = truth.var * truth.lambda1 * truth.lambda1 / mu *
                  xstar.squaredNorm();

  const int mc = 200000;
  double mean = 0, sq = 0;
  VectorXd a(d);
  for (int i = 0; i < mc; ++i) {
    model.draw(rng, a);
    // grad psi_a(x*) - grad f(x*) = (Sigma - a a^T) x*; grad f(x*) = 0
    VectorXd g = truth.sigma * xstar - a * (a.dot(xstar));
    double z = 0.5 * g.dot(ldlt.solve(g));
    mean += z;
    sq += z * z;
  }
  mean /= mc;
  sq /= mc;
  double se = std::sqrt(std::max(0.0, sq - mean * mean) / mc);
  CHECK(mean <= sigma2 + 3 * se);
}

TEST_CASE("file oracle: csv one-pass, rewind only with the multi-epoch flag") {
  std::string path = "test_stream_tmp.csv";
  {
    std::ofstream out(path);
    out << "1.0,2.0\n3.0,4.0\n";
  }
  Rng rng(27);
  {
    FileOracle oracle(path, FileOracle::Format::kCsv);
    CHECK(oracle.dim() == 2);
    VectorXd a(2);
    oracle.draw(rng, a);
    CHECK(a[0] == 1.0);
    oracle.draw(rng, a);
    CHECK(a[1] == 4.0);
    CHECK_THROWS_AS(oracle.draw(rng, a), BudgetError);
  }
  {
    FileOracle oracle(path, FileOracle::Format::kCsv, /*multi_epoch=*/true);
    VectorXd a(2);
    for (int i = 0; i < 5; ++i) oracle.draw(rng, a);
    CHECK(oracle.rewound());
    CHECK(a[0] == 1.0);  // 5th draw wraps to the first record
  }
  std::remove(path.c_str());
}

TEST_CASE("file oracle: binary format with a dimension header") {
  std::string path = "test_stream_tmp.bin";
  {
    std::ofstream out(path, std::ios::binary);
    std::uint64_t d = 3;
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
    double rec[6] = {1.0, 2.0, 3.0, -1.0, -2.0, -3.0};
    out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
  }
  FileOracle oracle(path, FileOracle::Format::kBinary);
  CHECK(oracle.dim() == 3);
  Rng rng(28);
  VectorXd a(3);
  oracle.draw(rng, a);
  CHECK(a[2] == 3.0);
  oracle.draw(rng, a);
  CHECK(a[0] == -1.0);
  CHECK_THROWS_AS(oracle.draw(rng, a), BudgetError);
  std::remove(path.c_str());
}

TEST_CASE("pilot var-hint estimate is in the right range on the spike") {
  Rng dir(29);
  SpikeModel model = SpikeModel::random_direction(30, 1.0, dir);
  StreamBudget budget;
  SampleStream stream(model, budget);
  Rng rng(30);
  double v = estimate_var_hint(stream, rng);
  CHECK(v >= 0.5 * model.truth()->var);
  CHECK(v <= 2.0 * model.truth()->var);
}
