// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#include "sieve/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace sieve {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

RowMatrixd read_matrix_market(std::istream& in, const std::string& name) {
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError(name + ": empty file", 1);
  ++lineno;

  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket")
    throw ParseError(name + ": missing %%MatrixMarket banner", lineno);
  if (lower(object) != "matrix" || lower(format) != "coordinate")
    throw ParseError(name + ": expected 'matrix coordinate'", lineno);
  if (lower(field) != "real")
    throw ParseError(name + ": only real matrices are supported", lineno);
  if (lower(symmetry) != "general")
    throw ParseError(name + ": only general symmetry is supported", lineno);

  long n = -1, d = -1;
  long long nnz = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream sz(line);
    if (!(sz >> n >> d >> nnz) || n <= 0 || d <= 0 || nnz < 0)
      throw ParseError(name + ": bad size line", lineno);
    break;
  }
  if (n < 0) throw ParseError(name + ": missing size line", lineno);

  // row -> (col -> summed value)
  std::vector<std::map<std::int32_t, double>> acc(n);
  long long seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream es(line);
    long i = 0, j = 0;
    std::string vtok;
    double v = 0;
    if (!(es >> i >> j >> vtok))
      throw ParseError(name + ": bad entry", lineno);
    try {
      v = std::stod(vtok);  // accepts nan/inf, which the check below rejects
    } catch (const std::exception&) {
      throw ParseError(name + ": bad entry value '" + vtok + "'", lineno);
    }
    if (i < 1 || i > n || j < 1 || j > d)
      throw ParseError(name + ": entry (" + std::to_string(i) + "," +
                           std::to_string(j) + ") out of range",
                       lineno);
    if (!std::isfinite(v))
      throw ParseError(name + ": non-finite value at (" + std::to_string(i) +
                           "," + std::to_string(j) + ")",
                       lineno);
    acc[i - 1][static_cast<std::int32_t>(j - 1)] += v;
    ++seen;
  }
  if (seen != nnz)
    throw ParseError(name + ": entry count " + std::to_string(seen) +
                         " does not match header " + std::to_string(nnz),
                     lineno);

  std::vector<std::vector<std::pair<std::int32_t, double>>> rows(n);
  for (long i = 0; i < n; ++i)
    rows[i].assign(acc[i].begin(), acc[i].end());
  return RowMatrixd(d, rows);
}

RowMatrixd read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_matrix_market(in, path);
}

RowMatrixd read_dense_csv(std::istream& in, const std::string& name) {
  std::vector<std::vector<std::pair<std::int32_t, double>>> rows;
  std::string line;
  long lineno = 0;
  long d = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::pair<std::int32_t, double>> row;
    std::size_t pos = 0;
    std::int32_t col = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      std::string field = line.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      try {
        std::size_t used = 0;
        double v = std::stod(field, &used);
        if (!std::isfinite(v))
          throw ParseError(name + ": non-finite value in column " +
                               std::to_string(col + 1),
                           lineno);
        if (v != 0) row.emplace_back(col, v);
      } catch (const ParseError&) {
        throw;
      } catch (const std::exception&) {
        throw ParseError(name + ": bad field in column " + std::to_string(col + 1),
                         lineno);
      }
      ++col;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (d < 0)
      d = col;
    else if (col != d)
      throw ParseError(name + ": expected " + std::to_string(d) + " columns, got " +
                           std::to_string(col),
                       lineno);
    rows.push_back(std::move(row));
  }
  if (d <= 0) throw ParseError(name + ": no data rows", lineno);
  return RowMatrixd(d, rows);
}

RowMatrixd read_dense_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_dense_csv(in, path);
}

void write_matrix_market(const RowMatrixd& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << " " << m.dim() << " " << m.nnz() << "\n";
  out.precision(17);
  for (std::int64_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t k = 0; k < r.idx.size(); ++k)
      out << (i + 1) << " " << (r.idx[k] + 1) << " " << r.val[k] << "\n";
  }
}

}  // namespace sieve
