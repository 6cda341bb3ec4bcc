// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIEVE_SHIFTED_OPERATOR_HPP
#define SIEVE_SHIFTED_OPERATOR_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "sieve/rng.hpp"
#include "sieve/row_matrix.hpp"

namespace sieve {

// The pair (lambda, A) representing B = lambda*I - A^T A, plus the row
// sampling distribution p_i = |a_i|^2 / |A|_F^2 with O(log n) draws via a
// cumulative table. B is positive definite iff lambda > lambda_1(A^T A);
// callers own that guarantee. Immutable after construction.
template <typename Scalar>
class ShiftedOperator {
 public:
  ShiftedOperator(const RowMatrix<Scalar>& matrix, Scalar shift)
      : m_(&matrix), lambda_(shift) {
    const auto& rn = matrix.row_norms_sq();
    cum_.resize(rn.size());
    Scalar acc = 0;
    for (std::size_t i = 0; i < rn.size(); ++i) {
      acc += rn[i];
      cum_[i] = acc;
    }
    total_ = matrix.frob_sq();
  }

  const RowMatrix<Scalar>& matrix() const { return *m_; }
  Scalar shift() const { return lambda_; }

  Scalar p(std::int64_t i) const { return m_->row_norm_sq(i) / total_; }

  // i ~ p; zero rows are never drawn (their cumulative interval is empty).
  std::int64_t sample_row(Rng& rng) const {
    Scalar u = static_cast<Scalar>(rng.uniform()) * total_;
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    if (it == cum_.end()) --it;
    return it - cum_.begin();
  }

 private:
  const RowMatrix<Scalar>* m_;
  Scalar lambda_;
  std::vector<Scalar> cum_;
  Scalar total_;
};

using ShiftedOperatord = ShiftedOperator<double>;

// B x = lambda x - A^T A x.
template <typename Scalar>
Vector<Scalar> apply_shifted(const ShiftedOperator<Scalar>& b,
                             const Vector<Scalar>& x) {
  b.matrix().check_dim(x.size());
  Vector<Scalar> y = apply_sigma(b.matrix(), x);
  y = b.shift() * x - y;
  return y;
}

// |x|_B = sqrt(x^T B x); requires lambda > lambda_1 up to roundoff.
template <typename Scalar>
Scalar b_norm(const ShiftedOperator<Scalar>& b, const Vector<Scalar>& x) {
  b.matrix().check_dim(x.size());
  Scalar q = b.shift() * x.squaredNorm() -
             b.matrix().apply_a(x).squaredNorm();
  if (q < -Scalar(1e-10) * b.shift() * x.squaredNorm())
    throw ShiftError("b_norm: x^T B x < 0; shift is not above lambda_1");
  return std::sqrt(std::max(q, Scalar(0)));
}

template <typename Scalar>
Scalar b_norm_sq(const ShiftedOperator<Scalar>& b, const Vector<Scalar>& x) {
  Scalar s = b_norm(b, x);
  return s * s;
}

}  // namespace sieve

#endif  // SIEVE_SHIFTED_OPERATOR_HPP
