// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "sieve/io.hpp"

using namespace sieve;

TEST_CASE("matrix market round trip through a stream") {
  std::istringstream in(
      "%%MatrixMarket matrix coordinate real general\n"
      "% comment line\n"
      "3 4 5\n"
      "1 1 2.5\n"
      "1 3 -1.0\n"
      "2 2 0.5\n"
      "3 4 7\n"
      "3 1 1e-3\n");
  RowMatrixd m = read_matrix_market(in, "t");
  CHECK(m.rows() == 3);
  CHECK(m.dim() == 4);
  CHECK(m.nnz() == 5);
  CHECK(m.row_dot(0, VectorXd::Unit(4, 2)) == doctest::Approx(-1.0));
  CHECK(m.row_dot(2, VectorXd::Unit(4, 0)) == doctest::Approx(1e-3));
}

TEST_CASE("matrix market rejects malformed headers with a line number") {
  std::istringstream in("%%MatrixMkt matrix coordinate real general\n1 1 0\n");
  try {
    read_matrix_market(in, "t");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(std::string(e.what()).find("banner") != std::string::npos);
  }

  std::istringstream pat("%%MatrixMarket matrix array real general\n");
  CHECK_THROWS_AS(read_matrix_market(pat, "t"), ParseError);
  std::istringstream sym("%%MatrixMarket matrix coordinate real symmetric\n");
  CHECK_THROWS_AS(read_matrix_market(sym, "t"), ParseError);
}

TEST_CASE("matrix market rejects non-finite and out-of-range entries") {
  std::istringstream in(
      "%%MatrixMarket matrix coordinate real general\n"
      "2 2 2\n"
      "1 1 1.0\n"
      "2 1 nan\n");
  try {
    read_matrix_market(in, "t");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 4);
    CHECK(std::string(e.what()).find("(2,1)") != std::string::npos);
  }

  std::istringstream range(
      "%%MatrixMarket matrix coordinate real general\n"
      "2 2 1\n"
      "3 1 1.0\n");
  CHECK_THROWS_AS(read_matrix_market(range, "t"), ParseError);

  std::istringstream count(
      "%%MatrixMarket matrix coordinate real general\n"
      "2 2 3\n"
      "1 1 1.0\n");
  CHECK_THROWS_AS(read_matrix_market(count, "t"), ParseError);
}

TEST_CASE("dense csv reader parses rows and validates") {
  std::istringstream in("1.0,0.0,2.0\n0.5,1.5,-2.5\n");
  RowMatrixd m = read_dense_csv(in, "t");
  CHECK(m.rows() == 2);
  CHECK(m.dim() == 3);
  CHECK(m.nnz() == 5);  // explicit zero dropped

  std::istringstream ragged("1.0,2.0\n1.0\n");
  CHECK_THROWS_AS(read_dense_csv(ragged, "t"), ParseError);

  std::istringstream inf("1.0,inf\n");
  try {
    read_dense_csv(inf, "t");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(std::string(e.what()).find("column 2") != std::string::npos);
  }
}
