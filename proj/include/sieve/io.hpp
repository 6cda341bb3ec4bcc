// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIEVE_IO_HPP
#define SIEVE_IO_HPP

#include <iosfwd>
#include <string>

#include "sieve/row_matrix.hpp"

namespace sieve {

// Matrix Market coordinate format, real general. Rejects NaN/Inf entries and
// malformed headers with line diagnostics; duplicate entries are summed.
RowMatrixd read_matrix_market(const std::string& path);
RowMatrixd read_matrix_market(std::istream& in, const std::string& name);

// Dense CSV, one row per line. Same validation.
RowMatrixd read_dense_csv(const std::string& path);
RowMatrixd read_dense_csv(std::istream& in, const std::string& name);

void write_matrix_market(const RowMatrixd& m, const std::string& path);

}  // namespace sieve

#endif  // SIEVE_IO_HPP
