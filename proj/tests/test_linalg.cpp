// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <numeric>

#include "sieve/spectrum.hpp"
#include "test_support.hpp"

using namespace sieve;
using test::random_matrix;
using test::spectrum_instance;

namespace {

RowMatrixd identity2() {
  return RowMatrixd::FromDense(MatrixXd::Identity(2, 2));
}

}  // namespace

TEST_CASE("apply_sigma: identity and diagonal cases") {
  RowMatrixd eye = identity2();
  VectorXd x(2);
  x << 3, 4;
  CHECK(apply_sigma(eye, x).isApprox(x, 1e-15));

  MatrixXd a(2, 2);
  a << 1, 0, 0, 2;  // A^T A = diag(1, 4)
  RowMatrixd m = RowMatrixd::FromDense(a);
  VectorXd y(2);
  y << 1, 1;
  VectorXd expect(2);
  expect << 1, 4;
  CHECK(apply_sigma(m, y).isApprox(expect, 1e-15));
}

TEST_CASE("apply_sigma matches the dense product on a random 5x3 instance") {
  RowMatrixd m = random_matrix(5, 3, 7);
  MatrixXd dense = MatrixXd::Zero(3, 3);
  for (std::int64_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t p = 0; p < r.idx.size(); ++p)
      for (std::size_t q = 0; q < r.idx.size(); ++q)
        dense(r.idx[p], r.idx[q]) += r.val[p] * r.val[q];
  }
  VectorXd e1 = VectorXd::Unit(3, 0);
  CHECK(apply_sigma(m, e1).isApprox(dense * e1, 1e-13));

  VectorXd bad(4);
  CHECK_THROWS_AS(apply_sigma(m, bad), DimensionError);
}

TEST_CASE("apply_shifted: identity, zero, and dense-oracle cases") {
  RowMatrixd eye = identity2();
  ShiftedOperatord b(eye, 3.0);
  VectorXd x(2);
  x << 1, 0;
  VectorXd expect(2);
  expect << 2, 0;
  CHECK(apply_shifted(b, x).isApprox(expect, 1e-15));
  CHECK(apply_shifted(b, VectorXd(VectorXd::Zero(2))).norm() == 0.0);

  RowMatrixd m = random_matrix(6, 4, 11);
  DenseSpectrumd oracle(m);
  double lambda = 1.5 * oracle.lambda1();
  ShiftedOperatord bs(m, lambda);
  Rng rng(3);
  VectorXd z(4);
  rng.normal_fill(z);
  VectorXd viaOracle = lambda * z - oracle.apply_sigma_dense(z);
  CHECK(apply_shifted(bs, z).isApprox(viaOracle, 1e-10));
}

TEST_CASE("shifted operator application is linear") {
  RowMatrixd m = random_matrix(8, 5, 21);
  ShiftedOperatord b(m, 4.0);
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd x(5), y(5);
    rng.normal_fill(x);
    rng.normal_fill(y);
    double al = rng.normal(), be = rng.normal();
    VectorXd lhs = apply_shifted(b, VectorXd(al * x + be * y));
    VectorXd rhs = al * apply_shifted(b, x) + be * apply_shifted(b, y);
    CHECK(lhs.isApprox(rhs, 1e-12));
  }
}

TEST_CASE("rayleigh quotient: diagonal, eigenvector, and mixture") {
  MatrixXd a(2, 2);
  a << 1, 0, 0, 2;
  RowMatrixd m = RowMatrixd::FromDense(a);
  CHECK(rayleigh_quotient(m, VectorXd(VectorXd::Unit(2, 1))) == doctest::Approx(4.0));

  RowMatrixd inst = spectrum_instance({2.0, 1.5, 0.7, 0.1}, 5);
  DenseSpectrumd oracle(inst);
  double q1 = rayleigh_quotient(inst, oracle.v(0));
  CHECK(std::abs(q1 - oracle.lambda1()) <= 1e-10 * oracle.lambda1());

  VectorXd mix = ((oracle.v(0) + oracle.v(1)) / std::sqrt(2.0)).eval();
  CHECK(rayleigh_quotient(inst, mix) ==
        doctest::Approx(0.5 * (oracle.lambda(0) + oracle.lambda(1))).epsilon(1e-10));

  CHECK_THROWS_AS(rayleigh_quotient(inst, VectorXd(VectorXd::Zero(4))), DimensionError);
}

TEST_CASE("rayleigh quotient stays within the spectrum") {
  RowMatrixd m = random_matrix(10, 6, 31);
  DenseSpectrumd oracle(m);
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    VectorXd x(6);
    rng.normal_fill(x);
    double q = rayleigh_quotient(m, x);
    CHECK(q >= oracle.lambda(5) - 1e-12);
    CHECK(q <= oracle.lambda1() + 1e-12);
  }
}

TEST_CASE("b_norm: identity shift, zero vector, eigen-expansion, invalid shift") {
  RowMatrixd eye = identity2();
  ShiftedOperatord b(eye, 2.0);  // B = I
  VectorXd x(2);
  x << 1, 0;
  CHECK(b_norm(b, x) == doctest::Approx(1.0));
  CHECK(b_norm(b, VectorXd(VectorXd::Zero(2))) == 0.0);

  RowMatrixd m = random_matrix(7, 4, 17);
  DenseSpectrumd oracle(m);
  double lambda = 1.3 * oracle.lambda1();
  ShiftedOperatord bs(m, lambda);
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    VectorXd z(4);
    rng.normal_fill(z);
    VectorXd alpha = oracle.coeffs(z);
    double expect = 0;
    for (int i = 0; i < 4; ++i)
      expect += (lambda - oracle.lambda(i)) * alpha[i] * alpha[i];
    CHECK(b_norm_sq(bs, z) == doctest::Approx(expect).epsilon(1e-10));
  }

  ShiftedOperatord bad(m, 0.5 * oracle.lambda1());
  CHECK_THROWS_AS(b_norm(bad, VectorXd(oracle.v(0))), ShiftError);
}

TEST_CASE("B is positive definite iff lambda exceeds lambda1") {
  RowMatrixd m = random_matrix(9, 5, 23);
  DenseSpectrumd oracle(m);
  ShiftedOperatord above(m, oracle.lambda1() * 1.01);
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    VectorXd z(5);
    rng.normal_fill(z);
    CHECK(z.dot(apply_shifted(above, z)) > 0);
  }
  ShiftedOperatord below(m, oracle.lambda1() * 0.99);
  CHECK(oracle.v(0).dot(apply_shifted(below, VectorXd(oracle.v(0)))) < 0);
}

TEST_CASE("row matrix caches norms consistently and validates input") {
  RowMatrixd m = random_matrix(50, 8, 41);
  const auto& rn = m.row_norms_sq();
  double direct = std::accumulate(rn.begin(), rn.end(), 0.0);
  CHECK(std::abs(m.frob_sq() - direct) <=
        8 * std::numeric_limits<double>::epsilon() * direct);
  for (double v : rn) CHECK(v >= 0);

  using Rows = std::vector<std::vector<std::pair<std::int32_t, double>>>;
  CHECK_THROWS_AS(RowMatrixd(3, Rows{{{3, 1.0}}}), DimensionError);
  CHECK_THROWS_AS(RowMatrixd(3, Rows{{{-1, 1.0}}}), DimensionError);
  CHECK_THROWS_AS(RowMatrixd(3, Rows{{{1, 1.0}, {1, 2.0}}}), DimensionError);
  CHECK_THROWS_AS(RowMatrixd(3, Rows{{{2, 1.0}, {0, 2.0}}}), DimensionError);

  // explicit zeros are dropped, zero rows are flagged but kept
  RowMatrixd z(3, Rows{{{0, 1.0}, {1, 0.0}}, {}, {{2, 2.0}}});
  CHECK(z.nnz() == 2);
  CHECK(z.rows() == 3);
  CHECK(z.zero_row_count() == 1);
  CHECK(z.is_zero_row(1));
}

TEST_CASE("sampling distribution is p_i = |a_i|^2/|A|_F^2 and skips zero rows") {
  using Rows = std::vector<std::vector<std::pair<std::int32_t, double>>>;
  RowMatrixd m(2, Rows{{{0, 1.0}}, {}, {{1, 2.0}}, {{0, 1.0}, {1, 1.0}}});
  ShiftedOperatord b(m, 10.0);
  double total = 0;
  for (std::int64_t i = 0; i < m.rows(); ++i) total += b.p(i);
  CHECK(std::abs(total - 1.0) <= 1e-12);
  CHECK(b.p(1) == 0.0);

  Rng rng(77);
  std::vector<std::int64_t> counts(4, 0);
  const int n = 200000;
  for (int t = 0; t < n; ++t) ++counts[b.sample_row(rng)];
  CHECK(counts[1] == 0);
  for (std::int64_t i = 0; i < 4; ++i) {
    double expect = b.p(i) * n;
    CHECK(std::abs(counts[i] - expect) <= 6 * std::sqrt(expect + 1.0));
  }
}

TEST_CASE("dense spectrum oracle satisfies its residual and orthogonality bounds") {
  RowMatrixd m = random_matrix(40, 12, 57);
  DenseSpectrumd oracle(m);
  for (int i = 0; i < 12; ++i) {
    VectorXd r = apply_sigma(m, VectorXd(oracle.v(i))) - oracle.lambda(i) * oracle.v(i);
    CHECK(r.norm() <= 1e-8 * oracle.lambda1());
    for (int j = 0; j < 12; ++j) {
      double dot = oracle.v(i).dot(oracle.v(j));
      CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-10);
    }
  }
}

TEST_CASE("potential G: eigenvector, orthogonal start, two-term expansion") {
  RowMatrixd m = spectrum_instance({3.0, 2.0, 1.0, 0.5}, 13);
  DenseSpectrumd oracle(m);
  double lambda = 1.2 * oracle.lambda1();
  ShiftedOperatord b(m, lambda);

  CHECK(potential_g(b, oracle, VectorXd(oracle.v(0))) == doctest::Approx(0.0));
  CHECK_THROWS_AS(potential_g(b, oracle, VectorXd(oracle.v(1))),
                  OrthogonalStartError);

  VectorXd mix = ((oracle.v(0) + oracle.v(1)) / std::sqrt(2.0)).eval();
  double expect = std::sqrt((lambda - oracle.lambda(1)) / (lambda - oracle.lambda(0)));
  CHECK(potential_g(b, oracle, mix) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("potential G is scale invariant") {
  RowMatrixd m = random_matrix(10, 6, 91);
  DenseSpectrumd oracle(m);
  ShiftedOperatord b(m, 1.05 * oracle.lambda1());
  Rng rng(8);
  VectorXd x(6);
  rng.normal_fill(x);
  double g = potential_g(b, oracle, x);
  for (double c : {2.0, -3.0, 1e-8, 1e8}) {
    CHECK(potential_g(b, oracle, VectorXd(c * x)) ==
          doctest::Approx(g).epsilon(1e-12));
  }
}

TEST_CASE("rayleigh error bounds eigenvector overlap (1000 random x per instance)") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    RowMatrixd m = spectrum_instance(test::decaying_spectrum(8, 0.2), seed);
    DenseSpectrumd oracle(m);
    double l1 = oracle.lambda1(), gap = oracle.gap();
    Rng rng(seed);
    int tested = 0;
    for (int t = 0; t < 1000; ++t) {
      // overlaps spread so a good fraction fall in the lemma's regime
      double overlap = 0.8 + 0.2 * rng.uniform();
      VectorXd x = test::mixed_with_v1(oracle, overlap, rng.next_u64());
      double eps = l1 - rayleigh_quotient(m, x);
      if (eps > l1 * gap) continue;
      ++tested;
      double bound = std::sqrt(1.0 - eps / (l1 * gap));
      CHECK(std::abs(oracle.v(0).dot(x)) >= bound - 1e-12);
    }
    CHECK(tested > 300);
  }
}

TEST_CASE("potential-to-rayleigh sandwich") {
  RowMatrixd m = spectrum_instance(test::decaying_spectrum(10, 0.15), 44);
  DenseSpectrumd oracle(m);
  double l1 = oracle.lambda1(), gap = oracle.gap();
  double lambda = test::warm_shift(oracle);
  ShiftedOperatord b(m, lambda);
  Rng rng(45);
  int tested = 0;
  for (int t = 0; t < 500; ++t) {
    double overlap = 0.8 + 0.2 * rng.uniform();
    VectorXd x = test::mixed_with_v1(oracle, overlap, rng.next_u64());
    double eps = l1 - rayleigh_quotient(m, x);
    if (eps > 0.5 * l1 * gap) continue;
    ++tested;
    double g2 = std::pow(potential_g(b, oracle, x), 2);
    double lo = eps / (lambda - l1);
    double hi = (1.0 + (lambda - l1) / (l1 * gap)) *
                (1.0 + 2.0 * eps / (l1 * gap)) * eps / (lambda - l1);
    CHECK(g2 >= lo * (1 - 1e-9));
    CHECK(g2 <= hi * (1 + 1e-9));
  }
  CHECK(tested > 100);
}

TEST_CASE("inverted power step contracts both norm ratios by lambda2/lambda1 of B^-1") {
  RowMatrixd m = spectrum_instance(test::decaying_spectrum(9, 0.25), 71);
  DenseSpectrumd oracle(m);
  double lambda = test::warm_shift(oracle);
  ShiftedOperatord b(m, lambda);
  double ratio_bound = (lambda - oracle.lambda1()) / (lambda - oracle.lambda(1));

  Rng rng(72);
  for (int t = 0; t < 50; ++t) {
    VectorXd x(9);
    rng.normal_fill(x);
    x.normalize();
    VectorXd xt = oracle.solve_shifted(lambda, x);

    double g_before = potential_g(b, oracle, x);
    double g_after = potential_g(b, oracle, xt);
    CHECK(g_after <= ratio_bound * g_before * (1 + 1e-9));

    auto l2_ratio = [&](const VectorXd& v) {
      double par = std::abs(oracle.v(0).dot(v));
      double perp = std::sqrt(std::max(0.0, v.squaredNorm() - par * par));
      return perp / par;
    };
    CHECK(l2_ratio(xt) <= ratio_bound * l2_ratio(x) * (1 + 1e-9));
  }
}

TEST_CASE("spectral-norm matrix approximation preserves the top eigenvector") {
  // |Sigma - Sigma~|_2 <= 0.01 sqrt(eps) gap lambda1  =>  |x^T v1| >= 1 - eps
  Rng rng(99);
  for (double eps : {0.01, 0.1}) {
    for (int rep = 0; rep < 5; ++rep) {
      RowMatrixd m = spectrum_instance(test::decaying_spectrum(30, 0.3), 100 + rep);
      DenseSpectrumd oracle(m);
      MatrixXd sigma = MatrixXd::Zero(30, 30);
      for (int i = 0; i < 30; ++i)
        sigma += oracle.lambda(i) * oracle.v(i) * oracle.v(i).transpose();
      MatrixXd e(30, 30);
      for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j) e(i, j) = rng.normal();
      e = 0.5 * (e + e.transpose()).eval();
      double enorm = e.operatorNorm();
      double bound = 0.01 * std::sqrt(eps) * oracle.gap() * oracle.lambda1();
      sigma += (bound / enorm) * e;
      DenseSpectrumd perturbed(sigma);
      CHECK(std::abs(perturbed.v(0).dot(oracle.v(0))) >= 1.0 - eps);
    }
  }
}
