// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmg/assembly.hpp"
#include "bmg/eig.hpp"
#include "bmg/mesh.hpp"
#include "bmg/smoothers.hpp"
#include "bmg/solvers.hpp"
#include "bmg/transfer.hpp"

namespace bmg {

/// One mesh level with its assembled forms.
struct Level {
  TriMesh mesh;
  AssembledForms forms;
};

/// A refinement hierarchy: meshes, forms, and the prolongations between
/// consecutive levels. Level 0 is the coarsest.
struct Hierarchy {
  std::vector<Level> levels;
  std::vector<Prolongation> transfers;  // transfers[k] maps level k -> k+1

  int level_count() const { return static_cast<int>(levels.size()); }
  int dof(int level) const { return levels[level].forms.dof_count; }
  const AssembledForms& forms(int level) const { return levels[level].forms; }
  const Prolongation& up(int coarse_level) const {
    return transfers[coarse_level];
  }
  SparseMatrix compose(int from_level, int to_level) const {
    return compose_prolongations(transfers, from_level, to_level);
  }
};

inline Hierarchy build_hierarchy(TriMesh coarse,
                                 const SurfaceProjector& projector,
                                 int level_count) {
  if (level_count < 1) throw NumericalError("hierarchy: need at least 1 level");
  coarse.level = 0;  // hierarchy levels are numbered from its own coarsest
  Hierarchy h;
  h.levels.push_back({coarse, assemble(coarse)});
  for (int k = 1; k < level_count; ++k) {
    TriMesh fine = refine(h.levels.back().mesh, projector);
    h.transfers.push_back(build_prolongation(h.levels.back().mesh, fine));
    h.levels.push_back({std::move(fine), AssembledForms{}});
    h.levels.back().forms = assemble(h.levels.back().mesh);
  }
  return h;
}

/// How the fine-level source problems are approximated.
enum class SourceSolverKind { Direct, GaussSeidel, Kaczmarz };

struct SourceSolve {
  SourceSolverKind kind = SourceSolverKind::Direct;
  int sweeps = 0;

  static SourceSolve direct() { return {SourceSolverKind::Direct, 0}; }
  static SourceSolve gauss_seidel(int sweeps) {
    return {SourceSolverKind::GaussSeidel, sweeps};
  }
  static SourceSolve kaczmarz(int sweeps) {
    return {SourceSolverKind::Kaczmarz, sweeps};
  }
};

namespace detail {

constexpr double kernel_shift_tol = 1e-10;

/// M-orthogonal projection of x against a set of M-orthonormal vectors.
inline void deflate(Vector& x, const SparseMatrix& m,
                    std::span<const Vector> against) {
  if (against.empty()) return;
  Vector mx = m.apply(x);
  for (const Vector& v : against) x -= v.dot(mx) * v;
}

struct KernelProjector {
  // constant direction of the closed-surface pencil, M-normalized
  Vector constant;
  Vector m_constant;
  double mass;  // 1^T M 1

  explicit KernelProjector(const SparseMatrix& m)
      : constant(Vector::Ones(m.rows())),
        m_constant(m.apply(constant)),
        mass(constant.dot(m_constant)) {}

  // makes a load vector compatible: <f, 1> = 0
  void project_rhs(Vector& f) const { f -= (f.sum() / mass) * m_constant; }
  // removes the kernel component of a solution: <x, 1>_M = 0
  void project_solution(Vector& x) const {
    x -= (x.dot(m_constant) / mass) * constant;
  }
};

}  // namespace detail

/// Approximates (A - shift M) x = rhs with the requested method.
///
/// The direct path detects shifts landing on a discrete eigenvalue and
/// retries once with the shift perturbed by 1e-8 (1+|shift|). When
/// `deflate_kernel` is set (unshifted problems on a closed surface, where A
/// alone is singular on constants) the right side is made compatible first
/// and the kernel component is projected out of the result; the factorized
/// operator is nudged off the kernel by the same perturbation rule.
inline Vector shifted_source_solve(const AssembledForms& forms, double shift,
                                   Vector rhs, const SourceSolve& method,
                                   const Vector* initial_guess,
                                   bool deflate_kernel,
                                   std::span<const Vector> deflate_against = {}) {
  const SparseMatrix& a = forms.stiffness;
  const SparseMatrix& m = forms.mass;
  std::optional<detail::KernelProjector> kernel;
  double solve_shift = shift;
  if (deflate_kernel && std::abs(shift) <= detail::kernel_shift_tol) {
    kernel.emplace(m);
    kernel->project_rhs(rhs);
    if (method.kind == SourceSolverKind::Direct)
      solve_shift = shift - 1e-8 * (1.0 + std::abs(shift));
  }
  if (method.kind == SourceSolverKind::Direct) {
    ShiftedOperator op(a, m, solve_shift);
    Vector x;
    try {
      x = solve_direct(op, rhs);
    } catch (const SingularSystemError&) {
      double perturbed = solve_shift + 1e-8 * (1.0 + std::abs(solve_shift));
      ShiftedOperator retry(a, m, perturbed);
      x = solve_direct(retry, rhs);
    }
    if (kernel) kernel->project_solution(x);
    detail::deflate(x, m, deflate_against);
    return x;
  }
  ShiftedOperator op(a, m, solve_shift);
  Vector x = initial_guess ? *initial_guess : Vector::Zero(a.rows());
  if (kernel) kernel->project_solution(x);
  for (int s = 0; s < method.sweeps; ++s) {
    if (method.kind == SourceSolverKind::GaussSeidel)
      x = gauss_seidel(op, rhs, x, 1);
    else
      x = kaczmarz(op, rhs, x, 1);
    if (kernel) kernel->project_solution(x);
    detail::deflate(x, m, deflate_against);
  }
  return x;
}

/// Lowest `count` eigenpairs of (A - mu M) x = lambda M x by a dense solve.
/// Reported values are the pencil's (mu is not re-added). Reserved for
/// systems small enough to solve densely.
inline EigenSet coarse_eigensolve(const AssembledForms& forms, double mu,
                                  int count) {
  if (forms.dof_count > 2000)
    throw NumericalError(
        "coarse eigensolve: " + std::to_string(forms.dof_count) +
        " unknowns exceed the dense-solver budget (2000)");
  if (count < 1 || count > forms.dof_count)
    throw NumericalError("coarse eigensolve: invalid count");
  Eigen::MatrixXd a = forms.stiffness.to_dense();
  if (mu != 0.0) a -= mu * forms.mass.to_dense();
  EigenSet all = dense_generalized_eig(a, forms.mass.to_dense());
  EigenSet out;
  out.values.assign(all.values.begin(), all.values.begin() + count);
  out.vectors = all.vectors.leftCols(count);
  out.basis = Basis::CoarseNodal;
  out.shift = mu;
  return out;
}

struct TwoGridResult {
  double value = 0.0;  // position in the unshifted spectrum
  Vector vector;       // fine nodal coefficients, M-normalized
};

/// One two-grid step: take coarse pair (lambda_H, u_H) of the mu-shifted
/// pencil, solve the indefinite fine source problem
///   (A_h - (mu + lambda_H) M_h) u = M_h (P u_H),
/// deflate against previously accepted eigenvectors, and return the fine
/// Rayleigh quotient. When mu + lambda_H vanishes the coarse function is the
/// kernel mode and its prolongation is passed through unchanged.
inline TwoGridResult two_grid(const EigenSet& coarse, int target_index,
                              const AssembledForms& fine,
                              const Prolongation& p, double mu,
                              const SourceSolve& method,
                              std::span<const Vector> deflate_against = {}) {
  if (target_index < 0 || target_index >= coarse.count())
    throw NumericalError("two_grid: target index out of range");
  double lambda_h = coarse.values[target_index];
  Vector prolonged = prolong(p, coarse.vectors.col(target_index));
  double shift = mu + lambda_h;
  Vector u;
  if (std::abs(shift) <= detail::kernel_shift_tol) {
    u = prolonged;
    detail::deflate(u, fine.mass, deflate_against);
  } else {
    Vector rhs = fine.mass.apply(prolonged);
    if (rhs.norm() == 0.0)
      throw NumericalError("two_grid: zero right side");
    u = shifted_source_solve(fine, shift, std::move(rhs), method, &prolonged,
                             /*deflate_kernel=*/false, deflate_against);
  }
  double norm = std::sqrt(u.dot(fine.mass.apply(u)));
  if (norm == 0.0)
    throw NumericalError("two_grid: iterate vanished after deflation");
  u /= norm;
  TwoGridResult result;
  result.vector = std::move(u);
  result.value = rayleigh_quotient(fine.stiffness, fine.mass, result.vector);
  return result;
}

struct CascadeResult {
  EigenSet final_set;  // fine nodal, values are unshifted spectrum positions
  // history[k][i]: unshifted estimate for pair i on level k (level 0 entries
  // are the coarse eigensolve values)
  std::vector<std::vector<double>> history;
};

/// Two-grid steps applied between adjacent levels, feeding each approximation
/// forward as the next level's coarse data. The shift mu only enters the
/// final Rayleigh quotient; the per-level source operator uses the running
/// eigenvalue estimate itself.
inline CascadeResult cascade_two_grid(const Hierarchy& hier, double mu,
                                      int level_count,
                                      const SourceSolve& method, int count) {
  if (level_count < 2 || level_count > hier.level_count())
    throw NumericalError("cascade: invalid level count");
  EigenSet coarse = coarse_eigensolve(hier.forms(0), mu, count);
  CascadeResult result;
  result.history.push_back(coarse.physical_values());

  std::vector<Vector> current;
  std::vector<double> physical = coarse.physical_values();
  for (int i = 0; i < count; ++i) current.push_back(coarse.vectors.col(i));

  for (int k = 1; k < level_count; ++k) {
    const AssembledForms& fine = hier.forms(k);
    const Prolongation& p = hier.up(k - 1);
    std::vector<Vector> accepted;
    accepted.reserve(current.size());
    std::vector<double> next_values(current.size());
    for (std::size_t i = 0; i < current.size(); ++i) {
      EigenSet level_set;
      level_set.values = {physical[i] - mu};
      level_set.vectors = current[i];
      level_set.shift = mu;
      TwoGridResult step =
          two_grid(level_set, 0, fine, p, mu, method, accepted);
      next_values[i] = step.value;
      accepted.push_back(std::move(step.vector));
    }
    current = std::move(accepted);
    physical = std::move(next_values);
    result.history.push_back(physical);
  }

  // package ascending
  std::vector<int> order(current.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return physical[a] < physical[b]; });
  EigenSet final_set;
  final_set.basis = Basis::FineNodal;
  final_set.shift = 0.0;
  final_set.vectors.resize(hier.dof(level_count - 1),
                           static_cast<int>(current.size()));
  for (std::size_t i = 0; i < order.size(); ++i) {
    final_set.values.push_back(physical[order[i]]);
    final_set.vectors.col(static_cast<int>(i)) = current[order[i]];
  }
  result.final_set = std::move(final_set);
  return result;
}

/// Source approximation for one enrichment candidate:
///   (A_h - mu_H M_h) u = lambda_Hi M_h (P u_Hi).
/// lambda_Hi = 0 is the kernel case; the prolonged vector passes through.
inline Vector fine_source_solve(const AssembledForms& fine, double mu_h,
                                double lambda_hi, const Vector& prolonged,
                                const SourceSolve& method) {
  if (!std::isfinite(lambda_hi))
    throw NumericalError("fine source solve: non-finite eigenvalue");
  if (lambda_hi == 0.0) return prolonged;
  Vector rhs = lambda_hi * fine.mass.apply(prolonged);
  bool deflate_kernel = std::abs(mu_h) <= detail::kernel_shift_tol;
  return shifted_source_solve(fine, mu_h, std::move(rhs), method, &prolonged,
                              deflate_kernel);
}

}  // namespace bmg
