// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmg/sparse.hpp"

namespace bmg {

/// Coordinate system an EigenSet's vectors live in.
enum class Basis { CoarseNodal, FineNodal, EnrichedBlock };

/// Eigenvalue approximations paired with coefficient vectors. Values are the
/// eigenvalues of the pencil (A - shift*M, M), ascending; add `shift` to get
/// the position in the unshifted spectrum. Vectors are M-orthonormal in the
/// tagged basis.
struct EigenSet {
  std::vector<double> values;
  Eigen::MatrixXd vectors;
  Basis basis = Basis::CoarseNodal;
  double shift = 0.0;

  int count() const { return static_cast<int>(values.size()); }
  std::vector<double> physical_values() const {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] + shift;
    return out;
  }
};

/// All eigenpairs of A x = lambda M x for symmetric A and SPD M, ascending,
/// with M-orthonormal eigenvectors. Reduction to a standard symmetric
/// problem through the Cholesky factor M = L L^T. Meant for the coarse and
/// enriched systems only (couple of thousand unknowns at most).
inline EigenSet dense_generalized_eig(const Eigen::MatrixXd& a,
                                      const Eigen::MatrixXd& m) {
  if (a.rows() != a.cols() || m.rows() != m.cols() || a.rows() != m.rows())
    throw NumericalError("dense eig: matrices must be square and same size");
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError(
        "dense eig: mass matrix is not positive definite (Cholesky failed)");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      a, m, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success)
    throw NumericalError("dense eig: iteration failed to converge");
  EigenSet out;
  out.values.assign(solver.eigenvalues().data(),
                    solver.eigenvalues().data() + a.rows());
  out.vectors = solver.eigenvectors();
  return out;
}

inline double m_inner(const SparseMatrix& m, const Vector& x, const Vector& y) {
  return x.dot(m.apply(y));
}

struct OrthonormalizeResult {
  Eigen::MatrixXd vectors;        // kept columns, M-orthonormal
  std::vector<int> dropped;       // input column indices below the drop tol
};

/// Modified Gram-Schmidt in the M inner product, two passes per vector.
/// Columns whose remaining M-norm falls below rel_drop_tol times their
/// original M-norm are rank-deficient against the accepted set and are
/// dropped (their indices are reported back).
inline OrthonormalizeResult b_orthonormalize(const Eigen::MatrixXd& input,
                                             const SparseMatrix& m,
                                             double rel_drop_tol = 1e-10) {
  if (input.rows() != m.rows())
    throw NumericalError("b_orthonormalize: vector length mismatch");
  OrthonormalizeResult result;
  std::vector<Vector> kept;
  std::vector<Vector> kept_m;  // M * kept, cached
  for (int j = 0; j < input.cols(); ++j) {
    Vector v = input.col(j);
    double original = std::sqrt(m_inner(m, v, v));
    if (original == 0.0) {
      result.dropped.push_back(j);
      continue;
    }
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i < kept.size(); ++i)
        v -= kept_m[i].dot(v) * kept[i];
    double norm = std::sqrt(m_inner(m, v, v));
    if (norm < rel_drop_tol * original) {
      result.dropped.push_back(j);
      continue;
    }
    v /= norm;
    kept_m.push_back(m.apply(v));
    kept.push_back(std::move(v));
  }
  result.vectors.resize(input.rows(), static_cast<int>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i)
    result.vectors.col(static_cast<int>(i)) = kept[i];
  return result;
}

/// (v^T A v)/(v^T M v) + mu.
inline double rayleigh_quotient(const SparseMatrix& a, const SparseMatrix& m,
                                const Vector& v, double mu = 0.0) {
  double vmv = m_inner(m, v, v);
  if (vmv == 0.0)
    throw NumericalError("rayleigh quotient: zero vector");
  return v.dot(a.apply(v)) / vmv + mu;
}

}  // namespace bmg
