// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "bmg/sparse.hpp"

namespace bmg {

namespace detail {

inline Eigen::SparseMatrix<double> to_eigen(const SparseMatrix& m) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(m.nonzeros()));
  for (int r = 0; r < m.rows(); ++r)
    for (int k = m.row_begin(r); k < m.row_end(r); ++k)
      t.emplace_back(r, m.col_index(k), m.value(k));
  Eigen::SparseMatrix<double> out(m.rows(), m.cols());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

}  // namespace detail

/// Sparse direct solve through a pivoted LU factorization, valid for the
/// symmetric indefinite shifted systems this library produces. Fails with
/// SingularSystemError when the matrix is singular to working tolerance,
/// which is how a shift landing on a discrete eigenvalue is detected:
/// either the factorization breaks down, the residual check
/// |r| <= tol (|A|_F |x| + |b|) fails, or the solution amplification
/// |x| |A|_F / |b| exceeds the near-singularity threshold.
class DirectSolver {
public:
  explicit DirectSolver(const SparseMatrix& matrix)
      : norm_(matrix.frobenius_norm()) {
    if (matrix.rows() != matrix.cols())
      throw NumericalError("direct solve: matrix not square");
    Eigen::SparseMatrix<double> a = detail::to_eigen(matrix);
    a.makeCompressed();
    lu_.compute(a);
    if (lu_.info() != Eigen::Success)
      throw SingularSystemError(
          "direct solve: factorization failed (matrix singular to working "
          "tolerance)",
          std::numeric_limits<double>::infinity());
    eigen_matrix_ = std::move(a);
  }

  Vector solve(const Vector& b) const {
    if (b.size() != eigen_matrix_.rows())
      throw NumericalError("direct solve: right side length mismatch");
    Vector x = lu_.solve(b);
    double residual = (eigen_matrix_ * x - b).norm();
    double xn = x.norm();
    double bn = b.norm();
    if (residual > residual_tol * (norm_ * xn + bn))
      throw SingularSystemError(
          "direct solve: residual " + std::to_string(residual) +
              " exceeds tolerance, matrix near singular",
          bn > 0.0 ? xn * norm_ / bn : std::numeric_limits<double>::infinity());
    if (bn > 0.0) {
      double amplification = xn * norm_ / bn;
      if (amplification > amplification_limit)
        throw SingularSystemError(
            "direct solve: solution amplification " +
                format_full(amplification) +
                " indicates a singular-to-tolerance matrix",
            amplification);
    }
    return x;
  }

  static constexpr double residual_tol = 1e-10;
  static constexpr double amplification_limit = 1e13;

private:
  Eigen::SparseMatrix<double> eigen_matrix_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  double norm_;
};

inline Vector solve_direct(const SparseMatrix& a, const Vector& b) {
  return DirectSolver(a).solve(b);
}

inline Vector solve_direct(const ShiftedOperator& op, const Vector& b) {
  return DirectSolver(op.materialized()).solve(b);
}

}  // namespace bmg
