// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIEVE_ROW_MATRIX_HPP
#define SIEVE_ROW_MATRIX_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sieve/errors.hpp"

namespace sieve {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

// Pairwise summation; deterministic for a fixed input order.
template <typename Scalar>
Scalar pairwise_sum(std::span<const Scalar> v) {
  const std::size_t n = v.size();
  if (n <= 8) {
    Scalar s = 0;
    for (Scalar x : v) s += x;
    return s;
  }
  std::size_t h = n / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

// n x d matrix stored as compressed sparse rows. Rows are the unit of access:
// per-row gradients dominate the stochastic solvers, and the non-uniform
// sampling distribution p_i = |a_i|^2 / |A|_F^2 lives here too. Dense rows are
// just the degenerate sparse encoding. Immutable after construction.
template <typename Scalar>
class RowMatrix {
 public:
  struct RowView {
    std::span<const std::int32_t> idx;
    std::span<const Scalar> val;
  };

  RowMatrix(std::int64_t d,
            const std::vector<std::vector<std::pair<std::int32_t, Scalar>>>& rows)
      : d_(d), n_(static_cast<std::int64_t>(rows.size())) {
    if (d <= 0) throw DimensionError("RowMatrix: dimension must be positive");
    row_ptr_.reserve(n_ + 1);
    row_ptr_.push_back(0);
    for (const auto& row : rows) {
      std::int32_t prev = -1;
      for (const auto& [j, v] : row) {
        if (j < 0 || j >= d)
          throw DimensionError("RowMatrix: column index out of range");
        if (j <= prev)
          throw DimensionError("RowMatrix: row indices must be strictly increasing");
        prev = j;
        if (v == Scalar(0)) continue;  // no explicit zeros stored
        if (!std::isfinite(static_cast<double>(v)))
          throw ParseError("RowMatrix: non-finite entry");
        col_.push_back(j);
        val_.push_back(v);
      }
      row_ptr_.push_back(static_cast<std::int64_t>(col_.size()));
    }
    finalize();
  }

  static RowMatrix FromDense(const Matrix<Scalar>& a) {
    std::vector<std::vector<std::pair<std::int32_t, Scalar>>> rows(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        if (a(i, j) != Scalar(0))
          rows[i].emplace_back(static_cast<std::int32_t>(j), a(i, j));
    return RowMatrix(a.cols(), rows);
  }

  std::int64_t rows() const { return n_; }
  std::int64_t dim() const { return d_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(val_.size()); }
  Scalar frob_sq() const { return frob_sq_; }
  Scalar row_norm_sq(std::int64_t i) const { return row_norms_sq_[i]; }
  const std::vector<Scalar>& row_norms_sq() const { return row_norms_sq_; }
  std::int64_t zero_row_count() const { return zero_rows_; }
  bool is_zero_row(std::int64_t i) const {
    return row_ptr_[i] == row_ptr_[i + 1];
  }

  RowView row(std::int64_t i) const {
    auto b = row_ptr_[i], e = row_ptr_[i + 1];
    return {std::span<const std::int32_t>(col_.data() + b, e - b),
            std::span<const Scalar>(val_.data() + b, e - b)};
  }

  Scalar row_dot(std::int64_t i, const Vector<Scalar>& x) const {
    auto r = row(i);
    Scalar s = 0;
    for (std::size_t k = 0; k < r.idx.size(); ++k) s += r.val[k] * x[r.idx[k]];
    return s;
  }

  // y += c * a_i
  void row_axpy(std::int64_t i, Scalar c, Vector<Scalar>& y) const {
    auto r = row(i);
    for (std::size_t k = 0; k < r.idx.size(); ++k) y[r.idx[k]] += c * r.val[k];
  }

  // y = A x  (one row pass)
  Vector<Scalar> apply_a(const Vector<Scalar>& x) const {
    check_dim(x.size());
    Vector<Scalar> y(n_);
    for (std::int64_t i = 0; i < n_; ++i) y[i] = row_dot(i, x);
    return y;
  }

  // x = A^T y  (one row pass)
  Vector<Scalar> apply_at(const Vector<Scalar>& y) const {
    if (y.size() != n_) throw DimensionError("apply_at: length mismatch");
    Vector<Scalar> x = Vector<Scalar>::Zero(d_);
    for (std::int64_t i = 0; i < n_; ++i) row_axpy(i, y[i], x);
    return x;
  }

  void check_dim(Eigen::Index len) const {
    if (len != d_) throw DimensionError("vector length does not match dimension");
  }

 private:
  void finalize() {
    row_norms_sq_.resize(n_);
    zero_rows_ = 0;
    for (std::int64_t i = 0; i < n_; ++i) {
      auto r = row(i);
      std::vector<Scalar> sq(r.val.size());
      for (std::size_t k = 0; k < r.val.size(); ++k) sq[k] = r.val[k] * r.val[k];
      row_norms_sq_[i] = pairwise_sum(std::span<const Scalar>(sq));
      if (r.val.empty()) ++zero_rows_;
    }
    frob_sq_ = pairwise_sum(std::span<const Scalar>(row_norms_sq_));
  }

  std::int64_t d_ = 0, n_ = 0;
  std::vector<std::int64_t> row_ptr_;
  std::vector<std::int32_t> col_;
  std::vector<Scalar> val_;
  std::vector<Scalar> row_norms_sq_;
  Scalar frob_sq_ = 0;
  std::int64_t zero_rows_ = 0;
};

using RowMatrixd = RowMatrix<double>;

// Sigma x = A^T (A x); cost O(nnz(A)).
template <typename Scalar>
Vector<Scalar> apply_sigma(const RowMatrix<Scalar>& m, const Vector<Scalar>& x) {
  return m.apply_at(m.apply_a(x));
}

// quot(x) = x^T Sigma x / x^T x = |Ax|^2 / |x|^2; always in [lambda_d, lambda_1].
template <typename Scalar>
Scalar rayleigh_quotient(const RowMatrix<Scalar>& m, const Vector<Scalar>& x) {
  m.check_dim(x.size());
  Scalar xx = x.squaredNorm();
  if (xx == Scalar(0)) throw DimensionError("rayleigh_quotient: zero vector");
  return m.apply_a(x).squaredNorm() / xx;
}

}  // namespace sieve

#endif  // SIEVE_ROW_MATRIX_HPP
