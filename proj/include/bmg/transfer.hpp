// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "bmg/mesh.hpp"
#include "bmg/sparse.hpp"

namespace bmg {

/// Geometric prolongation between two consecutive levels of a projected
/// refinement hierarchy. Inherited vertices get unit rows, refined vertices
/// get the two parent endpoints at weight 1/2, so every row sums to one and
/// constants are preserved. Restriction is the plain transpose in nodal
/// coordinates.
struct Prolongation {
  SparseMatrix matrix;  // N_fine x N_coarse
  int coarse_level = 0;
  int fine_level = 0;
};

inline Prolongation build_prolongation(const TriMesh& coarse,
                                       const TriMesh& fine) {
  if (fine.level != coarse.level + 1)
    throw NumericalError("prolongation: level mismatch (" +
                         std::to_string(coarse.level) + " -> " +
                         std::to_string(fine.level) + ")");
  if (fine.parent_edges.empty())
    throw NumericalError("prolongation: fine mesh carries no parent edges");
  if (fine.new_vertex_begin() != coarse.vertex_count())
    throw NumericalError(
        "prolongation: fine mesh was not refined from this coarse mesh");
  int n_coarse = coarse.vertex_count();
  int n_fine = fine.vertex_count();
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(n_coarse) +
                  2 * fine.parent_edges.size());
  for (int i = 0; i < n_coarse; ++i) entries.push_back({i, i, 1.0});
  for (std::size_t j = 0; j < fine.parent_edges.size(); ++j) {
    int row = n_coarse + static_cast<int>(j);
    const auto& parents = fine.parent_edges[j];
    if (parents[0] < 0 || parents[0] >= n_coarse || parents[1] < 0 ||
        parents[1] >= n_coarse)
      throw NumericalError("prolongation: parent edge out of coarse range");
    entries.push_back({row, parents[0], 0.5});
    entries.push_back({row, parents[1], 0.5});
  }
  Prolongation p;
  p.matrix = SparseMatrix::from_triplets(n_fine, n_coarse, std::move(entries));
  p.coarse_level = coarse.level;
  p.fine_level = fine.level;
  return p;
}

inline Vector prolong(const Prolongation& p, const Vector& coarse) {
  return p.matrix.apply(coarse);
}

/// P^T applied to a fine vector.
inline Vector restrict_to_coarse(const Prolongation& p, const Vector& fine) {
  return p.matrix.apply_transposed(fine);
}

/// Product P_to * ... * P_{from+1} mapping level `from_level` coefficients to
/// level `to_level`. The transfers span must hold consecutive prolongations;
/// gaps are an error.
inline SparseMatrix compose_prolongations(std::span<const Prolongation> chain,
                                          int from_level, int to_level) {
  if (to_level < from_level)
    throw NumericalError("compose: to_level below from_level");
  auto find = [&](int coarse_level) -> const Prolongation& {
    for (const Prolongation& p : chain)
      if (p.coarse_level == coarse_level && p.fine_level == coarse_level + 1)
        return p;
    throw NumericalError("compose: missing prolongation " +
                         std::to_string(coarse_level) + " -> " +
                         std::to_string(coarse_level + 1));
  };
  if (to_level == from_level) {
    // identity on the from-level size; take it from the adjacent transfer
    for (const Prolongation& p : chain) {
      if (p.coarse_level == from_level)
        return SparseMatrix::identity(p.matrix.cols());
      if (p.fine_level == from_level)
        return SparseMatrix::identity(p.matrix.rows());
    }
    throw NumericalError("compose: level not present in hierarchy");
  }
  SparseMatrix product = find(from_level).matrix;
  for (int level = from_level + 1; level < to_level; ++level)
    product = find(level).matrix.multiply(product);
  return product;
}

}  // namespace bmg
