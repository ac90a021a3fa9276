// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bmg/error.hpp"

namespace bmg {

using Vector = Eigen::VectorXd;

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Compressed-row sparse matrix. Column indices are strictly increasing
/// within each row and exact zeros are dropped during construction, so the
/// stored pattern is canonical and comparisons are well defined.
class SparseMatrix {
public:
  SparseMatrix() = default;

  static SparseMatrix from_triplets(int rows, int cols,
                                    std::vector<Triplet> entries) {
    if (rows < 0 || cols < 0) throw NumericalError("sparse: negative shape");
    for (const Triplet& t : entries) {
      if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
        throw NumericalError("sparse: triplet index out of range");
    }
    std::sort(entries.begin(), entries.end(),
              [](const Triplet& a, const Triplet& b) {
                return a.row != b.row ? a.row < b.row : a.col < b.col;
              });
    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.offsets_.assign(static_cast<std::size_t>(rows) + 1, 0);
    m.cols_idx_.reserve(entries.size());
    m.values_.reserve(entries.size());
    std::size_t i = 0;
    for (int r = 0; r < rows; ++r) {
      while (i < entries.size() && entries[i].row == r) {
        int c = entries[i].col;
        double v = 0.0;
        while (i < entries.size() && entries[i].row == r &&
               entries[i].col == c) {
          v += entries[i].value;
          ++i;
        }
        if (v != 0.0) {
          m.cols_idx_.push_back(c);
          m.values_.push_back(v);
        }
      }
      m.offsets_[static_cast<std::size_t>(r) + 1] =
          static_cast<int>(m.cols_idx_.size());
    }
    return m;
  }

  static SparseMatrix identity(int n) {
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, n, std::move(t));
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nonzeros() const { return static_cast<int>(values_.size()); }

  int row_begin(int r) const { return offsets_[static_cast<std::size_t>(r)]; }
  int row_end(int r) const {
    return offsets_[static_cast<std::size_t>(r) + 1];
  }
  int col_index(int k) const { return cols_idx_[static_cast<std::size_t>(k)]; }
  double value(int k) const { return values_[static_cast<std::size_t>(k)]; }

  double coeff(int r, int c) const {
    int lo = row_begin(r), hi = row_end(r);
    auto first = cols_idx_.begin() + lo;
    auto last = cols_idx_.begin() + hi;
    auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return 0.0;
    return values_[static_cast<std::size_t>(it - cols_idx_.begin())];
  }

  double diagonal(int i) const { return coeff(i, i); }

  /// y = A x, accumulated row-by-row in index order.
  Vector apply(const Vector& x) const {
    if (x.size() != cols_)
      throw NumericalError("spmv: dimension mismatch, matrix has " +
                           std::to_string(cols_) + " columns, vector has " +
                           std::to_string(x.size()) + " entries");
    Vector y = Vector::Zero(rows_);
    for (int r = 0; r < rows_; ++r) {
      double acc = 0.0;
      for (int k = row_begin(r); k < row_end(r); ++k)
        acc += value(k) * x[col_index(k)];
      y[r] = acc;
    }
    return y;
  }

  /// y = Aᵀ x.
  Vector apply_transposed(const Vector& x) const {
    if (x.size() != rows_)
      throw NumericalError("spmv^T: dimension mismatch");
    Vector y = Vector::Zero(cols_);
    for (int r = 0; r < rows_; ++r) {
      double xr = x[r];
      if (xr == 0.0) continue;
      for (int k = row_begin(r); k < row_end(r); ++k)
        y[col_index(k)] += value(k) * xr;
    }
    return y;
  }

  SparseMatrix transposed() const {
    std::vector<Triplet> t;
    t.reserve(values_.size());
    for (int r = 0; r < rows_; ++r)
      for (int k = row_begin(r); k < row_end(r); ++k)
        t.push_back({col_index(k), r, value(k)});
    return from_triplets(cols_, rows_, std::move(t));
  }

  /// this * other as a materialized sparse product.
  SparseMatrix multiply(const SparseMatrix& other) const {
    if (cols_ != other.rows_)
      throw NumericalError("sparse multiply: inner dimension mismatch");
    std::vector<Triplet> t;
    for (int r = 0; r < rows_; ++r) {
      for (int k = row_begin(r); k < row_end(r); ++k) {
        int mid = col_index(k);
        double v = value(k);
        for (int k2 = other.row_begin(mid); k2 < other.row_end(mid); ++k2)
          t.push_back({r, other.col_index(k2), v * other.value(k2)});
      }
    }
    return from_triplets(rows_, other.cols_, std::move(t));
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows_, cols_);
    for (int r = 0; r < rows_; ++r)
      for (int k = row_begin(r); k < row_end(r); ++k)
        d(r, col_index(k)) = value(k);
    return d;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }

  double max_symmetry_defect() const {
    double d = 0.0;
    for (int r = 0; r < rows_; ++r)
      for (int k = row_begin(r); k < row_end(r); ++k)
        d = std::max(d, std::abs(value(k) - coeff(col_index(k), r)));
    return d;
  }

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> offsets_{0};
  std::vector<int> cols_idx_;
  std::vector<double> values_;
};

/// View of A - mu*M. Nothing is materialized; row traversals merge the two
/// sorted CSR rows on the fly.
class ShiftedOperator {
public:
  ShiftedOperator(const SparseMatrix& a, const SparseMatrix& m, double shift)
      : a_(&a), m_(&m), shift_(shift) {
    if (a.rows() != m.rows() || a.cols() != m.cols())
      throw NumericalError("shifted operator: A and M shapes differ");
  }

  int rows() const { return a_->rows(); }
  int cols() const { return a_->cols(); }
  double shift() const { return shift_; }
  const SparseMatrix& a() const { return *a_; }
  const SparseMatrix& m() const { return *m_; }

  /// Calls f(col, value) for each structurally present entry of row r,
  /// in increasing column order.
  template <class F>
  void for_each_in_row(int r, F&& f) const {
    int ka = a_->row_begin(r), ea = a_->row_end(r);
    int km = m_->row_begin(r), em = m_->row_end(r);
    while (ka < ea || km < em) {
      int ca = ka < ea ? a_->col_index(ka) : INT32_MAX;
      int cm = km < em ? m_->col_index(km) : INT32_MAX;
      if (ca < cm) {
        f(ca, a_->value(ka));
        ++ka;
      } else if (cm < ca) {
        f(cm, -shift_ * m_->value(km));
        ++km;
      } else {
        f(ca, a_->value(ka) - shift_ * m_->value(km));
        ++ka;
        ++km;
      }
    }
  }

  double diagonal(int i) const {
    return a_->diagonal(i) - shift_ * m_->diagonal(i);
  }

  Vector apply(const Vector& x) const {
    return a_->apply(x) - shift_ * m_->apply(x);
  }

  SparseMatrix materialized() const {
    std::vector<Triplet> t;
    for (int r = 0; r < rows(); ++r)
      for_each_in_row(r, [&](int c, double v) { t.push_back({r, c, v}); });
    return SparseMatrix::from_triplets(rows(), cols(), std::move(t));
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (int r = 0; r < rows(); ++r)
      for_each_in_row(r, [&](int, double v) { s += v * v; });
    return std::sqrt(s);
  }

private:
  const SparseMatrix* a_;
  const SparseMatrix* m_;
  double shift_;
};

// Row access shims so smoothers can run on either a plain matrix or a
// shifted pair without materializing the shift.

template <class F>
void for_each_in_row(const SparseMatrix& m, int r, F&& f) {
  for (int k = m.row_begin(r); k < m.row_end(r); ++k)
    f(m.col_index(k), m.value(k));
}

template <class F>
void for_each_in_row(const ShiftedOperator& op, int r, F&& f) {
  op.for_each_in_row(r, std::forward<F>(f));
}

inline std::string format_full(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// Matrix Market coordinate writer (1-based, ASCII).
inline void write_matrix_market(const SparseMatrix& m, const std::string& path,
                                bool symmetric = false) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "%%MatrixMarket matrix coordinate real "
      << (symmetric ? "symmetric" : "general") << "\n";
  int count = 0;
  for (int r = 0; r < m.rows(); ++r)
    for (int k = m.row_begin(r); k < m.row_end(r); ++k)
      if (!symmetric || m.col_index(k) <= r) ++count;
  out << m.rows() << " " << m.cols() << " " << count << "\n";
  for (int r = 0; r < m.rows(); ++r)
    for (int k = m.row_begin(r); k < m.row_end(r); ++k) {
      int c = m.col_index(k);
      if (symmetric && c > r) continue;
      out << (r + 1) << " " << (c + 1) << " " << format_full(m.value(k))
          << "\n";
    }
  if (!out) throw IoError("write failed: " + path);
}

inline SparseMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string header;
  if (!std::getline(in, header))
    throw IoError(path + ":1: empty Matrix Market file");
  std::istringstream hs(header);
  std::string banner, object, fmt, field, symmetry;
  hs >> banner >> object >> fmt >> field >> symmetry;
  if (banner != "%%MatrixMarket" || object != "matrix" || fmt != "coordinate" ||
      field != "real")
    throw IoError(path + ":1: unsupported Matrix Market header");
  bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw IoError(path + ":1: unsupported symmetry '" + symmetry + "'");
  std::string line;
  int lineno = 1;
  // skip comments
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream ss(line);
  int rows = 0, cols = 0, nnz = 0;
  if (!(ss >> rows >> cols >> nnz))
    throw IoError(path + ":" + std::to_string(lineno) + ": malformed size line");
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(nnz));
  for (int i = 0; i < nnz; ++i) {
    if (!std::getline(in, line))
      throw IoError(path + ": unexpected end of file after " +
                    std::to_string(i) + " entries");
    ++lineno;
    std::istringstream es(line);
    int r = 0, c = 0;
    double v = 0.0;
    if (!(es >> r >> c >> v))
      throw IoError(path + ":" + std::to_string(lineno) + ": malformed entry");
    if (r < 1 || r > rows || c < 1 || c > cols)
      throw IoError(path + ":" + std::to_string(lineno) + ": index out of range");
    t.push_back({r - 1, c - 1, v});
    if (symmetric && r != c) t.push_back({c - 1, r - 1, v});
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(t));
}

}  // namespace bmg
