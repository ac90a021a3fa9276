// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bmg/mesh.hpp"
#include "bmg/sparse.hpp"

namespace bmg {

/// Stiffness and mass for piecewise-linear elements on a flat-triangle
/// surface mesh. The stiffness kernel contains the constants, the mass
/// matrix is positive definite, and 1^T M 1 equals the mesh area.
struct AssembledForms {
  SparseMatrix stiffness;
  SparseMatrix mass;
  int dof_count = 0;
};

namespace detail {

inline void require_nondegenerate(const Vec3& p0, const Vec3& p1,
                                  const Vec3& p2) {
  double max_edge = std::max(
      {(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});
  if (triangle_area(p0, p1, p2) <= 1e-14 * max_edge * max_edge)
    throw NumericalError("element: degenerate (near zero area) triangle");
}

}  // namespace detail

/// K_ij = integral over T of grad(phi_i) . grad(phi_j). Gradients are taken
/// in a 2D orthonormal frame spanned by the edge vectors, so no ambient
/// normal projection is involved; the cotangent assembly below serves as the
/// independent cross-check.
inline Eigen::Matrix3d element_stiffness(const Vec3& p0, const Vec3& p1,
                                         const Vec3& p2) {
  detail::require_nondegenerate(p0, p1, p2);
  Vec3 e1 = p1 - p0;
  Vec3 e2 = p2 - p0;
  Vec3 t1 = e1.normalized();
  Vec3 in_plane = e2 - e2.dot(t1) * t1;
  Vec3 t2 = in_plane.normalized();
  Eigen::Vector2d b(e1.dot(t1), e1.dot(t2));  // second component is 0
  Eigen::Vector2d c(e2.dot(t1), e2.dot(t2));
  Eigen::Matrix2d jacobian;
  jacobian.col(0) = b;
  jacobian.col(1) = c;
  Eigen::Matrix2d inv_t = jacobian.inverse().transpose();
  Eigen::Matrix<double, 2, 3> grads;
  grads.col(1) = inv_t.col(0);
  grads.col(2) = inv_t.col(1);
  grads.col(0) = -grads.col(1) - grads.col(2);
  double area = triangle_area(p0, p1, p2);
  return area * grads.transpose() * grads;
}

/// Consistent mass: area/6 on the diagonal, area/12 off it.
inline Eigen::Matrix3d element_mass(const Vec3& p0, const Vec3& p1,
                                    const Vec3& p2) {
  detail::require_nondegenerate(p0, p1, p2);
  double area = triangle_area(p0, p1, p2);
  Eigen::Matrix3d m;
  m.setConstant(area / 12.0);
  m.diagonal().setConstant(area / 6.0);
  return m;
}

/// Global scatter-add of the element matrices, triangle by triangle in mesh
/// order, so repeated runs produce bit-identical matrices.
inline AssembledForms assemble(const TriMesh& mesh) {
  std::vector<Triplet> stiff, mass;
  stiff.reserve(mesh.triangles.size() * 9);
  mass.reserve(mesh.triangles.size() * 9);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& p0 = mesh.vertices[tri[0]];
    const Vec3& p1 = mesh.vertices[tri[1]];
    const Vec3& p2 = mesh.vertices[tri[2]];
    Eigen::Matrix3d k, m;
    try {
      k = element_stiffness(p0, p1, p2);
      m = element_mass(p0, p1, p2);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (triangle " +
                           std::to_string(t) + ")");
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        stiff.push_back({tri[i], tri[j], k(i, j)});
        mass.push_back({tri[i], tri[j], m(i, j)});
      }
  }
  AssembledForms forms;
  forms.dof_count = mesh.vertex_count();
  forms.stiffness = SparseMatrix::from_triplets(forms.dof_count,
                                                forms.dof_count, std::move(stiff));
  forms.mass = SparseMatrix::from_triplets(forms.dof_count, forms.dof_count,
                                           std::move(mass));
  return forms;
}

/// Independent stiffness oracle: A_ij = -(cot a_ij + cot b_ij)/2 over the two
/// angles opposite edge (i,j), diagonal fixed by zero row sums. Equivalent to
/// the gradient-based assembly entrywise.
inline SparseMatrix cotangent_stiffness(const TriMesh& mesh) {
  int n = mesh.vertex_count();
  std::vector<Triplet> entries;
  entries.reserve(mesh.triangles.size() * 12);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& p0 = mesh.vertices[tri[0]];
    const Vec3& p1 = mesh.vertices[tri[1]];
    const Vec3& p2 = mesh.vertices[tri[2]];
    detail::require_nondegenerate(p0, p1, p2);
    double area = triangle_area(p0, p1, p2);
    double a2 = (p1 - p2).squaredNorm();  // edge opposite vertex 0
    double b2 = (p2 - p0).squaredNorm();  // opposite vertex 1
    double c2 = (p0 - p1).squaredNorm();  // opposite vertex 2
    std::array<double, 3> cot = {(b2 + c2 - a2) / (4.0 * area),
                                 (c2 + a2 - b2) / (4.0 * area),
                                 (a2 + b2 - c2) / (4.0 * area)};
    // angle at vertex k sits opposite the edge joining the other two vertices
    const std::array<std::array<int, 2>, 3> opposite = {
        {{1, 2}, {2, 0}, {0, 1}}};
    for (int k = 0; k < 3; ++k) {
      int i = tri[opposite[k][0]];
      int j = tri[opposite[k][1]];
      double w = -0.5 * cot[k];
      entries.push_back({i, j, w});
      entries.push_back({j, i, w});
      entries.push_back({i, i, -w});
      entries.push_back({j, j, -w});
    }
  }
  return SparseMatrix::from_triplets(n, n, std::move(entries));
}

}  // namespace bmg
