// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmg/eig.hpp"
#include "bmg/twogrid.hpp"

namespace bmg {

/// Coarse space V_H together with a block of fine-level enrichment vectors
/// and the assembled (N_H + m) square pencil
///
///   A_block = [ A_H        P^T A_h U ]     M_block likewise with M.
///             [ U^T A_h P  U^T A_h U ]
///
/// The top-left blocks are the coarse-mesh forms, not Galerkin products;
/// the spaces are non-nested, so the two differ. A block vector c expands to
/// the fine space as P c_coarse + U c_enrich.
struct EnrichedSystem {
  int coarse_dim = 0;
  SparseMatrix p;          // composed prolongation, N_h x N_H
  Eigen::MatrixXd u_block; // N_h x m, M_h-orthonormal columns
  Eigen::MatrixXd a_block;
  Eigen::MatrixXd m_block;

  int enrichment_dim() const { return static_cast<int>(u_block.cols()); }
  int total_dim() const { return coarse_dim + enrichment_dim(); }
};

inline EnrichedSystem build_enriched_system(const AssembledForms& coarse,
                                            const AssembledForms& fine,
                                            SparseMatrix p_composed,
                                            Eigen::MatrixXd u_block) {
  if (p_composed.rows() != fine.dof_count ||
      p_composed.cols() != coarse.dof_count)
    throw NumericalError("enriched system: prolongation shape mismatch");
  if (u_block.size() > 0 && u_block.rows() != fine.dof_count)
    throw NumericalError("enriched system: enrichment vector length mismatch");
  EnrichedSystem sys;
  sys.coarse_dim = coarse.dof_count;
  int m = static_cast<int>(u_block.cols());
  int n = sys.coarse_dim + m;
  sys.a_block.resize(n, n);
  sys.m_block.resize(n, n);
  sys.a_block.topLeftCorner(sys.coarse_dim, sys.coarse_dim) =
      coarse.stiffness.to_dense();
  sys.m_block.topLeftCorner(sys.coarse_dim, sys.coarse_dim) =
      coarse.mass.to_dense();
  for (int j = 0; j < m; ++j) {
    Vector au = fine.stiffness.apply(u_block.col(j));
    Vector mu = fine.mass.apply(u_block.col(j));
    Vector cross_a = p_composed.apply_transposed(au);
    Vector cross_m = p_composed.apply_transposed(mu);
    sys.a_block.block(0, sys.coarse_dim + j, sys.coarse_dim, 1) = cross_a;
    sys.a_block.block(sys.coarse_dim + j, 0, 1, sys.coarse_dim) =
        cross_a.transpose();
    sys.m_block.block(0, sys.coarse_dim + j, sys.coarse_dim, 1) = cross_m;
    sys.m_block.block(sys.coarse_dim + j, 0, 1, sys.coarse_dim) =
        cross_m.transpose();
    for (int i = 0; i < m; ++i) {
      double a_ij = u_block.col(i).dot(au);
      double m_ij = u_block.col(i).dot(mu);
      sys.a_block(sys.coarse_dim + i, sys.coarse_dim + j) = a_ij;
      sys.m_block(sys.coarse_dim + i, sys.coarse_dim + j) = m_ij;
    }
  }
  // enforce exact symmetry of the enrichment block
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      double a_sym = 0.5 * (sys.a_block(sys.coarse_dim + i, sys.coarse_dim + j) +
                            sys.a_block(sys.coarse_dim + j, sys.coarse_dim + i));
      sys.a_block(sys.coarse_dim + i, sys.coarse_dim + j) = a_sym;
      sys.a_block(sys.coarse_dim + j, sys.coarse_dim + i) = a_sym;
      double m_sym = 0.5 * (sys.m_block(sys.coarse_dim + i, sys.coarse_dim + j) +
                            sys.m_block(sys.coarse_dim + j, sys.coarse_dim + i));
      sys.m_block(sys.coarse_dim + i, sys.coarse_dim + j) = m_sym;
      sys.m_block(sys.coarse_dim + j, sys.coarse_dim + i) = m_sym;
    }
  sys.p = std::move(p_composed);
  sys.u_block = std::move(u_block);
  return sys;
}

/// Maps block coordinates to fine nodal coefficients.
inline Eigen::MatrixXd expand_to_fine(const EnrichedSystem& sys,
                                      const Eigen::MatrixXd& block_vectors) {
  if (block_vectors.rows() != sys.total_dim())
    throw NumericalError("expand: block coordinate length mismatch");
  Eigen::MatrixXd out(sys.p.rows(), block_vectors.cols());
  for (int j = 0; j < block_vectors.cols(); ++j) {
    Vector coarse_part = block_vectors.col(j).head(sys.coarse_dim);
    Vector fine = sys.p.apply(coarse_part);
    if (sys.enrichment_dim() > 0)
      fine += sys.u_block * block_vectors.col(j).tail(sys.enrichment_dim());
    out.col(j) = fine;
  }
  return out;
}

/// Dense eigensolve of the enriched pencil at shift mu. On a non-SPD block
/// mass matrix the error lists which enrichment columns are nearly dependent
/// on the prolonged coarse space (by the diagonal of the mass Schur
/// complement).
inline EigenSet enriched_eigensolve(const EnrichedSystem& sys, double mu,
                                    int count = -1) {
  if (count < 0) count = sys.total_dim();
  if (count > sys.total_dim())
    throw NumericalError("enriched eigensolve: count exceeds dimension");
  Eigen::MatrixXd a = sys.a_block;
  if (mu != 0.0) a -= mu * sys.m_block;
  EigenSet set;
  try {
    set = dense_generalized_eig(a, sys.m_block);
  } catch (const NumericalError&) {
    int nc = sys.coarse_dim, m = sys.enrichment_dim();
    std::string offenders;
    if (m > 0) {
      Eigen::MatrixXd mh = sys.m_block.topLeftCorner(nc, nc);
      Eigen::MatrixXd cross = sys.m_block.topRightCorner(nc, m);
      Eigen::MatrixXd schur = sys.m_block.bottomRightCorner(m, m) -
                              cross.transpose() * mh.ldlt().solve(cross);
      for (int i = 0; i < m; ++i)
        if (schur(i, i) < 1e-10) {
          if (!offenders.empty()) offenders += ", ";
          offenders += std::to_string(i);
        }
    }
    throw NumericalError(
        "enriched eigensolve: block mass matrix is not positive definite; "
        "enrichment columns nearly dependent on the coarse space: [" +
        offenders + "]");
  }
  set.values.resize(count);
  set.vectors = set.vectors.leftCols(count).eval();
  set.basis = Basis::EnrichedBlock;
  set.shift = mu;
  return set;
}

// ---------------------------------------------------------------------------
// Enrichment selection

enum class EnrichmentPolicy { NearShift, Window, Largest };

struct EnrichmentConfig {
  EnrichmentPolicy policy = EnrichmentPolicy::NearShift;
  int dim = 20;                  // cap for NearShift/Largest, size for Window
  double tol = std::numeric_limits<double>::infinity();
  std::optional<double> center;  // NearShift center; defaults to current shift
  int window_target = 0;         // Window policy: 1-based target index
};

/// Pairs whose unshifted position lies within `tol` of `center`, capped at
/// the `cap` nearest. Indices come back ascending.
inline std::vector<int> select_near(const EigenSet& set, double center,
                                    double tol, int cap) {
  std::vector<int> candidates;
  for (int i = 0; i < set.count(); ++i)
    if (std::abs(set.values[i] + set.shift - center) < tol)
      candidates.push_back(i);
  if (candidates.empty())
    throw NumericalError(
        "enrichment selection is empty; widen tol (no eigenvalue within " +
        std::to_string(tol) + " of " + std::to_string(center) + ")");
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    return std::abs(set.values[a] + set.shift - center) <
           std::abs(set.values[b] + set.shift - center);
  });
  if (static_cast<int>(candidates.size()) > cap) candidates.resize(cap);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

/// The window {target-size+1, ..., target} in 1-based counting.
inline std::vector<int> select_window(const EigenSet& set, int target_1based,
                                      int size) {
  if (size < 1 || target_1based < size || target_1based > set.count())
    throw NumericalError("enrichment window out of range");
  std::vector<int> out(size);
  std::iota(out.begin(), out.end(), target_1based - size);  // 0-based
  return out;
}

/// Indices of the k largest eigenvalues in the set.
inline std::vector<int> select_largest(const EigenSet& set, int k) {
  if (k < 1 || k > set.count())
    throw NumericalError("enrichment selection: invalid count");
  std::vector<int> out(k);
  std::iota(out.begin(), out.end(), set.count() - k);
  return out;
}

inline std::vector<int> select_enrichment(const EigenSet& set,
                                          const EnrichmentConfig& config,
                                          double current_shift) {
  switch (config.policy) {
    case EnrichmentPolicy::NearShift:
      return select_near(set, config.center.value_or(current_shift),
                         config.tol, config.dim);
    case EnrichmentPolicy::Window:
      return select_window(set, config.window_target, config.dim);
    case EnrichmentPolicy::Largest:
      return select_largest(set, config.dim);
  }
  throw NumericalError("unknown enrichment policy");
}

/// mu_prev plus the mean of the (shifted-pencil) Rayleigh quotients of the
/// current enrichment block. An empty-quotient call is invalid; all-zero
/// quotients leave the shift unchanged.
inline double update_shift(double mu_prev, std::span<const double> quotients) {
  if (quotients.empty())
    throw NumericalError("shift update: no Rayleigh quotients");
  double mean =
      std::accumulate(quotients.begin(), quotients.end(), 0.0) /
      static_cast<double>(quotients.size());
  return mu_prev + mean;
}

// ---------------------------------------------------------------------------
// Bootstrap cycles

struct BootstrapOptions {
  double mu0 = 0.0;
  bool averaged_shift = false;  // update mu after each cycle from quotients
  EnrichmentConfig enrichment;
  SourceSolve ascent_solver = SourceSolve::direct();  // levels below the top
  SourceSolve top_solver = SourceSolve::direct();     // current finest level
};

struct CycleRecord {
  int top_level = 0;
  double mu_before = 0.0;
  double mu_after = 0.0;
  std::vector<int> enrichment_indices;     // positions used this cycle
  std::vector<int> skipped;                // kernel/zero right side positions
  std::vector<int> dropped;                // rank deficient after MGS
  std::vector<double> x_quotients;         // unshifted RQ of the X columns
  std::vector<double> spectrum;            // unshifted enriched spectrum
};

struct BootstrapState {
  const Hierarchy* hierarchy = nullptr;
  BootstrapOptions options;
  double mu = 0.0;
  Eigen::MatrixXd x;          // enrichment block, level x_level nodal coords
  int x_level = 0;
  SparseMatrix p_x;           // composed prolongation 0 -> x_level
  std::vector<int> lambda;    // current enrichment index set (0-based)
  EigenSet last;              // latest (enriched) coarse eigensolve
  std::vector<CycleRecord> history;
};

inline BootstrapState bootstrap_init(const Hierarchy& hierarchy,
                                     const BootstrapOptions& options) {
  BootstrapState state;
  state.hierarchy = &hierarchy;
  state.options = options;
  state.mu = options.mu0;
  state.x.resize(hierarchy.dof(0), 0);
  state.x_level = 0;
  state.p_x = SparseMatrix::identity(hierarchy.dof(0));
  state.last = coarse_eigensolve(hierarchy.forms(0), options.mu0,
                                 hierarchy.dof(0));
  state.lambda = select_enrichment(state.last, options.enrichment, state.mu);
  return state;
}

/// One inverted V-cycle between level 0 and `top_level`:
///  1. eigensolve in the enriched space V_0 + X(x_level) at the current shift;
///  2. ascending source solves through the intermediate levels, each feeding
///     the next right side (Rayleigh quotient iteration);
///  3. smoothing/solve of the auxiliary source problem on the top level and
///     M-orthonormalization of the results, which become the new X;
///  4. shift update from the Rayleigh quotients of the new block;
///  5. eigensolve in the updated enriched space at the updated shift.
/// Cycles must ascend one level at a time (top_level == x_level + 1).
inline void bootstrap_vcycle(BootstrapState& state, int top_level) {
  const Hierarchy& hier = *state.hierarchy;
  const BootstrapOptions& opts = state.options;
  if (top_level != state.x_level + 1)
    throw NumericalError("v-cycle: expected top level " +
                         std::to_string(state.x_level + 1) + ", got " +
                         std::to_string(top_level));
  if (top_level >= hier.level_count())
    throw NumericalError("v-cycle: level beyond hierarchy");

  CycleRecord record;
  record.top_level = top_level;
  record.mu_before = state.mu;
  record.enrichment_indices = state.lambda;

  // step 1: eigensolve in V_0 + X at the incoming shift
  EigenSet pairs;
  std::optional<EnrichedSystem> sys;
  if (state.x.cols() == 0) {
    pairs = coarse_eigensolve(hier.forms(0), state.mu, hier.dof(0));
  } else {
    sys = build_enriched_system(hier.forms(0), hier.forms(state.x_level),
                                state.p_x, state.x);
    pairs = enriched_eigensolve(*sys, state.mu);
  }

  const double value_scale =
      std::max(1.0, std::abs(pairs.values.front()) +
                        std::abs(pairs.values.back()));

  // steps 2-3: ascend through the levels, then produce the new enrichment
  std::vector<Vector> produced;
  std::vector<int> produced_from;
  for (int idx : state.lambda) {
    if (idx < 0 || idx >= pairs.count())
      throw NumericalError("v-cycle: enrichment index out of range");
    double lambda_pencil = pairs.values[idx];
    // expand the block iterate onto the level X lives on
    Vector iterate;
    if (state.x.cols() == 0) {
      iterate = pairs.vectors.col(idx);
    } else {
      iterate = expand_to_fine(*sys, pairs.vectors.col(idx));
    }
    if (std::abs(lambda_pencil) <= 1e-14 * value_scale) {
      // zero right side: the source problem carries no information beyond
      // the prolonged iterate, which the coarse block already spans
      record.skipped.push_back(idx);
      continue;
    }
    int carried_level = state.x_level;
    for (int level = 1; level <= top_level; ++level) {
      const AssembledForms& forms = hier.forms(level);
      const SourceSolve& method =
          level == top_level ? opts.top_solver : opts.ascent_solver;
      Vector rhs, guess;
      if (carried_level == level - 1) {
        guess = prolong(hier.up(level - 1), iterate);
        rhs = lambda_pencil * forms.mass.apply(guess);
      } else if (carried_level == level) {
        guess = iterate;
        rhs = lambda_pencil * forms.mass.apply(iterate);
      } else {
        // data lives above this level: pair through the finer mass matrix
        // and restrict; the initial guess is nodal injection (shared
        // vertices keep their values)
        SparseMatrix lift = hier.compose(level, carried_level);
        rhs = lambda_pencil *
              lift.apply_transposed(hier.forms(carried_level).mass.apply(iterate));
        guess = iterate.head(forms.dof_count);
      }
      bool kernel = std::abs(state.mu) <= detail::kernel_shift_tol;
      iterate = shifted_source_solve(forms, state.mu, std::move(rhs), method,
                                     &guess, kernel);
      carried_level = level;
    }
    produced.push_back(std::move(iterate));
    produced_from.push_back(idx);
  }
  if (produced.empty())
    throw NumericalError("v-cycle: enrichment is empty after source solves");

  Eigen::MatrixXd candidates(hier.dof(top_level),
                             static_cast<int>(produced.size()));
  for (std::size_t j = 0; j < produced.size(); ++j)
    candidates.col(static_cast<int>(j)) = produced[j];
  const AssembledForms& top = hier.forms(top_level);
  OrthonormalizeResult ortho = b_orthonormalize(candidates, top.mass);
  for (int dropped : ortho.dropped)
    record.dropped.push_back(produced_from[static_cast<std::size_t>(dropped)]);
  if (ortho.vectors.cols() == 0)
    throw NumericalError("v-cycle: enrichment rank collapsed to zero");

  // step 4: shift update from the new block's Rayleigh quotients
  std::vector<double> shifted_quotients;
  for (int j = 0; j < ortho.vectors.cols(); ++j) {
    double rq = rayleigh_quotient(top.stiffness, top.mass,
                                  ortho.vectors.col(j));
    record.x_quotients.push_back(rq);
    shifted_quotients.push_back(rq - state.mu);
  }
  double mu_new = opts.averaged_shift
                      ? update_shift(state.mu, shifted_quotients)
                      : state.mu;

  // step 5: eigensolve in the updated enriched space at the updated shift
  SparseMatrix p_new = hier.compose(0, top_level);
  EnrichedSystem updated = build_enriched_system(hier.forms(0), top, p_new,
                                                 ortho.vectors);
  EigenSet final_pairs = enriched_eigensolve(updated, mu_new);
  record.spectrum = final_pairs.physical_values();
  record.mu_after = mu_new;

  state.mu = mu_new;
  state.x = std::move(updated.u_block);
  state.x_level = top_level;
  state.p_x = std::move(updated.p);
  state.last = std::move(final_pairs);
  state.lambda = select_enrichment(state.last, opts.enrichment, state.mu);
  state.history.push_back(std::move(record));
}

struct BfmgResult {
  // source approximations on the finest level: M-orthonormal columns with
  // their Rayleigh quotients (unshifted spectrum positions), ascending
  EigenSet final_set;
  // full enriched spectrum per cycle plus shifts and diagnostics
  std::vector<CycleRecord> history;
  double final_shift = 0.0;
};

/// Full-multigrid driver: coarse eigensolve, then V-cycles of increasing
/// depth 1..level_count-1. The final eigenpairs are the source
/// approximations on the finest level with their Rayleigh quotients.
inline BfmgResult bfmg(const Hierarchy& hierarchy,
                       const BootstrapOptions& options, int level_count) {
  if (level_count < 2 || level_count > hierarchy.level_count())
    throw NumericalError("bfmg: invalid level count");
  BootstrapState state = bootstrap_init(hierarchy, options);
  for (int top = 1; top < level_count; ++top) bootstrap_vcycle(state, top);

  const AssembledForms& top = hierarchy.forms(level_count - 1);
  int m = static_cast<int>(state.x.cols());
  std::vector<double> values(m);
  for (int j = 0; j < m; ++j)
    values[static_cast<std::size_t>(j)] =
        rayleigh_quotient(top.stiffness, top.mass, state.x.col(j));
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] < values[b]; });
  BfmgResult result;
  result.final_set.basis = Basis::FineNodal;
  result.final_set.shift = 0.0;
  result.final_set.vectors.resize(top.dof_count, m);
  for (int j = 0; j < m; ++j) {
    result.final_set.values.push_back(values[order[j]]);
    result.final_set.vectors.col(j) = state.x.col(order[j]);
  }
  result.history = std::move(state.history);
  result.final_shift = state.mu;
  return result;
}

}  // namespace bmg
