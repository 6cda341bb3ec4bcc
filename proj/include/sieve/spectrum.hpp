// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIEVE_SPECTRUM_HPP
#define SIEVE_SPECTRUM_HPP

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "sieve/shifted_operator.hpp"

namespace sieve {

// Dense symmetric eigendecomposition of Sigma = A^T A. This is the oracle
// behind the potential-function instrumentation and the exact-dense solver
// flag; the stochastic production paths never touch it. Intended for d up to
// a few hundred.
template <typename Scalar>
class DenseSpectrum {
 public:
  explicit DenseSpectrum(const RowMatrix<Scalar>& m) {
    Matrix<Scalar> sigma = Matrix<Scalar>::Zero(m.dim(), m.dim());
    for (std::int64_t i = 0; i < m.rows(); ++i) {
      auto r = m.row(i);
      for (std::size_t p = 0; p < r.idx.size(); ++p)
        for (std::size_t q = 0; q < r.idx.size(); ++q)
          sigma(r.idx[p], r.idx[q]) += r.val[p] * r.val[q];
    }
    init(sigma);
  }

  explicit DenseSpectrum(const Matrix<Scalar>& sigma) { init(sigma); }

  Eigen::Index dim() const { return vals_.size(); }
  // Eigenvalues in decreasing order.
  Scalar lambda(Eigen::Index i) const { return vals_[i]; }
  Scalar lambda1() const { return vals_[0]; }
  Scalar lambda2() const { return dim() > 1 ? vals_[1] : Scalar(0); }
  Scalar gap() const { return (lambda1() - lambda2()) / lambda1(); }
  Vector<Scalar> v(Eigen::Index i) const { return vecs_.col(i); }
  const Matrix<Scalar>& vectors() const { return vecs_; }

  // Coefficients of x in the eigenbasis.
  Vector<Scalar> coeffs(const Vector<Scalar>& x) const {
    return vecs_.transpose() * x;
  }

  // Exact B^{-1} x through the eigenbasis.
  Vector<Scalar> solve_shifted(Scalar lambda, const Vector<Scalar>& x) const {
    Vector<Scalar> a = coeffs(x);
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] /= (lambda - vals_[i]);
    return vecs_ * a;
  }

  Vector<Scalar> apply_sigma_dense(const Vector<Scalar>& x) const {
    Vector<Scalar> a = coeffs(x);
    return vecs_ * (vals_.asDiagonal() * a);
  }

 private:
  void init(const Matrix<Scalar>& sigma) {
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sigma);
    Eigen::Index d = sigma.rows();
    vals_.resize(d);
    vecs_.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      vals_[i] = es.eigenvalues()[d - 1 - i];
      vecs_.col(i) = es.eigenvectors().col(d - 1 - i);
    }
  }

  Vector<Scalar> vals_;
  Matrix<Scalar> vecs_;
};

using DenseSpectrumd = DenseSpectrum<double>;

// G(x) = |P_{v1 perp} x|_B / |P_{v1} x|_B, evaluated through the eigenbasis
// expansion sqrt(sum_{i>=2} a_i^2 (lambda - lambda_i)) / sqrt(a_1^2 (lambda - lambda_1)).
// Scale invariant in x. Test/diagnostic surface only: production code never
// knows v1.
template <typename Scalar>
Scalar potential_g(const ShiftedOperator<Scalar>& b,
                   const DenseSpectrum<Scalar>& oracle,
                   const Vector<Scalar>& x) {
  Vector<Scalar> a = oracle.coeffs(x);
  if (std::abs(a[0]) < Scalar(1e-15) * x.norm())
    throw OrthogonalStartError("potential_g: orthogonal start (v1^T x = 0)");
  Scalar num = 0;
  for (Eigen::Index i = 1; i < a.size(); ++i)
    num += a[i] * a[i] * (b.shift() - oracle.lambda(i));
  Scalar den = a[0] * a[0] * (b.shift() - oracle.lambda1());
  return std::sqrt(num / den);
}

// Gap-free potential: only eigendirections with lambda_i < (1 - eps/2) lambda_1
// count against x.
template <typename Scalar>
Scalar potential_g_gapfree(const ShiftedOperator<Scalar>& b,
                           const DenseSpectrum<Scalar>& oracle,
                           const Vector<Scalar>& x, Scalar eps) {
  Vector<Scalar> a = oracle.coeffs(x);
  if (std::abs(a[0]) < Scalar(1e-15) * x.norm())
    throw OrthogonalStartError("potential_g_gapfree: orthogonal start");
  Scalar cut = (Scalar(1) - eps / 2) * oracle.lambda1();
  Scalar num = 0;
  for (Eigen::Index i = 1; i < a.size(); ++i)
    if (oracle.lambda(i) < cut)
      num += a[i] * a[i] * (b.shift() - oracle.lambda(i));
  Scalar den = a[0] * a[0] * (b.shift() - oracle.lambda1());
  return std::sqrt(num / den);
}

// Direct factorization of the dense B = lambda*I - Sigma; backs the
// exact-dense solver flag. One factorization per shift, O(d^2) per solve.
template <typename Scalar>
class DenseShiftSolver {
 public:
  DenseShiftSolver(const RowMatrix<Scalar>& m, Scalar lambda) {
    Matrix<Scalar> bmat = Matrix<Scalar>::Zero(m.dim(), m.dim());
    for (std::int64_t i = 0; i < m.rows(); ++i) {
      auto r = m.row(i);
      for (std::size_t p = 0; p < r.idx.size(); ++p)
        for (std::size_t q = 0; q < r.idx.size(); ++q)
          bmat(r.idx[p], r.idx[q]) -= r.val[p] * r.val[q];
    }
    bmat.diagonal().array() += lambda;
    ldlt_.compute(bmat);
    if (ldlt_.info() != Eigen::Success)
      throw ShiftError("DenseShiftSolver: factorization failed");
  }

  Vector<Scalar> solve(const Vector<Scalar>& rhs) const {
    return ldlt_.solve(rhs);
  }

 private:
  Eigen::LDLT<Matrix<Scalar>> ldlt_;
};

using DenseShiftSolverd = DenseShiftSolver<double>;

}  // namespace sieve

#endif  // SIEVE_SPECTRUM_HPP
