// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <random>
#include <utility>

#include <Eigen/Dense>

#include "bmg/sparse.hpp"
#include "bmg/twogrid.hpp"

namespace testutil {

/// Hierarchy whose level 0 is the octahedron refined `base_refines` times.
/// Cached: several tests share the same meshes.
inline const bmg::Hierarchy& octa_hierarchy(int base_refines, int levels) {
  static std::map<std::pair<int, int>, bmg::Hierarchy> cache;
  auto key = std::make_pair(base_refines, levels);
  auto it = cache.find(key);
  if (it == cache.end()) {
    bmg::TriMesh base = bmg::make_octahedron();
    for (int i = 0; i < base_refines; ++i)
      base = bmg::refine(base, bmg::sphere_projector());
    it = cache
             .emplace(key, bmg::build_hierarchy(std::move(base),
                                                bmg::sphere_projector(), levels))
             .first;
  }
  return it->second;
}

inline std::mt19937& rng() {
  static std::mt19937 gen(20240911u);
  return gen;
}

inline Eigen::VectorXd random_vector(int n, std::mt19937& gen) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(gen);
  return v;
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937& gen) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = dist(gen);
  return m;
}

inline Eigen::MatrixXd random_spd(int n, std::mt19937& gen) {
  Eigen::MatrixXd b = random_matrix(n, n, gen);
  return b.transpose() * b + Eigen::MatrixXd::Identity(n, n);
}

inline bmg::SparseMatrix sparse_from_dense(const Eigen::MatrixXd& d) {
  std::vector<bmg::Triplet> t;
  for (int i = 0; i < d.rows(); ++i)
    for (int j = 0; j < d.cols(); ++j)
      if (d(i, j) != 0.0) t.push_back({i, j, d(i, j)});
  return bmg::SparseMatrix::from_triplets(static_cast<int>(d.rows()),
                                          static_cast<int>(d.cols()),
                                          std::move(t));
}

}  // namespace testutil
