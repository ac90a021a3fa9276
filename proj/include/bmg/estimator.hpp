// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <span>
#include <unordered_map>
#include <vector>

#include "bmg/assembly.hpp"
#include "bmg/mesh.hpp"

namespace bmg {

/// Residual-type error indicator split per triangle:
/// eta_T^2 = h_T^2 lambda^2 |u|^2_T  +  1/2 sum_e h_e |jump_e|^2_e  +  geo_T^2
/// where the jump is the conormal derivative mismatch across each edge and
/// the geometric part bounds the distortion between the flat triangle and
/// the sphere. All terms are 1-homogeneous in u.
struct EstimatorBreakdown {
  std::vector<double> volume;     // per triangle, squared
  std::vector<double> jump;       // per triangle, squared
  std::vector<double> geometric;  // per triangle, squared
  std::vector<double> eta;        // sqrt of the row sums
  double global = 0.0;
};

namespace detail {

/// In-plane gradient of the linear interpolant of (u0,u1,u2) on a triangle.
inline Vec3 surface_gradient(const Vec3& p0, const Vec3& p1, const Vec3& p2,
                             double u0, double u1, double u2) {
  Vec3 e1 = p1 - p0;
  Vec3 e2 = p2 - p0;
  Vec3 t1 = e1.normalized();
  Vec3 t2 = (e2 - e2.dot(t1) * t1).normalized();
  Eigen::Matrix2d jac;
  jac << e1.dot(t1), e2.dot(t1), e1.dot(t2), e2.dot(t2);
  Eigen::Vector2d rhs(u1 - u0, u2 - u0);
  Eigen::Vector2d g2 = jac.transpose().inverse() * rhs;
  return g2[0] * t1 + g2[1] * t2;
}

struct EdgeAdjacency {
  // edge key -> (triangle, triangle) with -1 for boundary
  std::unordered_map<std::uint64_t, std::array<int, 2>> sides;

  explicit EdgeAdjacency(const TriMesh& mesh) {
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      const auto& tri = mesh.triangles[t];
      for (int k = 0; k < 3; ++k) {
        std::uint64_t key = edge_key(tri[k], tri[(k + 1) % 3]);
        auto [it, inserted] = sides.try_emplace(key, std::array<int, 2>{t, -1});
        if (!inserted) it->second[1] = t;
      }
    }
  }

  int neighbor(std::uint64_t key, int triangle) const {
    const auto& pair = sides.at(key);
    return pair[0] == triangle ? pair[1] : pair[0];
  }
};

}  // namespace detail

/// Pointwise bound for the geometric distortion operator on the unit sphere,
/// evaluated at the three vertices of a triangle and maximized:
///   |(1 - n.n_T)/(n.n_T)| (|x|^2 + 4|x|).
/// The vertex normal of the sphere at x is x itself (vertices sit on the
/// surface). A non-positive n.n_T means the triangle is grossly misoriented.
inline double geometric_bound(const Vec3& p0, const Vec3& p1, const Vec3& p2) {
  Vec3 n_t = triangle_normal(p0, p1, p2);
  double worst = 0.0;
  for (const Vec3* p : {&p0, &p1, &p2}) {
    double r = p->norm();
    if (r == 0.0) throw NumericalError("geometric bound: vertex at origin");
    double alignment = p->dot(n_t) / r;
    if (alignment <= 0.0)
      throw NumericalError(
          "geometric bound: triangle normal opposes the sphere normal");
    worst = std::max(worst,
                     std::abs((1.0 - alignment) / alignment) * (r * r + 4.0 * r));
  }
  return worst;
}

/// Conormal-derivative jump of the piecewise-linear u across the shared edge
/// of two triangles. The edge tangent is oriented by ascending vertex index;
/// the jump enters the estimator squared, so the orientation choice only
/// fixes determinism.
inline double edge_jump(const TriMesh& mesh, const Vector& u, int tri_a,
                        int tri_b, int va, int vb) {
  if (va > vb) std::swap(va, vb);
  Vec3 tangent = (mesh.vertices[vb] - mesh.vertices[va]).normalized();
  double jump = 0.0;
  double sign = 1.0;
  for (int t : {tri_a, tri_b}) {
    const auto& tri = mesh.triangles[t];
    Vec3 gradient = detail::surface_gradient(
        mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]],
        u[tri[0]], u[tri[1]], u[tri[2]]);
    Vec3 n_t = triangle_normal(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                               mesh.vertices[tri[2]]);
    jump += sign * gradient.dot(n_t.cross(tangent));
    sign = -1.0;
  }
  return jump;
}

/// Full per-triangle breakdown for one eigenpair approximation.
inline EstimatorBreakdown estimate_error(const TriMesh& mesh,
                                         const Vector& u, double lambda) {
  if (u.size() != mesh.vertex_count())
    throw NumericalError("estimator: coefficient length mismatch");
  if (lambda < 0.0) throw NumericalError("estimator: negative eigenvalue");
  detail::EdgeAdjacency adjacency(mesh);
  int nt = mesh.triangle_count();
  EstimatorBreakdown out;
  out.volume.resize(nt);
  out.jump.resize(nt);
  out.geometric.resize(nt);
  out.eta.resize(nt);
  double total = 0.0;
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& p0 = mesh.vertices[tri[0]];
    const Vec3& p1 = mesh.vertices[tri[1]];
    const Vec3& p2 = mesh.vertices[tri[2]];
    Eigen::Vector3d local(u[tri[0]], u[tri[1]], u[tri[2]]);
    double h_t = std::max({(p1 - p0).norm(), (p2 - p1).norm(),
                           (p0 - p2).norm()});
    double l2_sq = std::max(0.0, local.dot(element_mass(p0, p1, p2) * local));
    // |grad u|^2 integrated over the flat triangle; the gradient differences
    // vanish exactly for constant data
    Vec3 gradient = detail::surface_gradient(p0, p1, p2, local[0], local[1],
                                             local[2]);
    double grad_sq = triangle_area(p0, p1, p2) * gradient.squaredNorm();
    out.volume[t] = h_t * h_t * lambda * lambda * l2_sq;

    double jump_sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      int va = tri[k], vb = tri[(k + 1) % 3];
      int other = adjacency.neighbor(detail::edge_key(va, vb), t);
      if (other < 0)
        throw NumericalError(
            "estimator: boundary edge on a mesh expected closed");
      double h_e = (mesh.vertices[va] - mesh.vertices[vb]).norm();
      double j = edge_jump(mesh, u, t, other, va, vb);
      jump_sum += h_e * (h_e * j * j);  // |const|^2 over the edge = h_e j^2
    }
    out.jump[t] = 0.5 * jump_sum;

    double bound = geometric_bound(p0, p1, p2);
    out.geometric[t] = bound * bound * grad_sq;

    double eta_sq = out.volume[t] + out.jump[t] + out.geometric[t];
    out.eta[t] = std::sqrt(eta_sq);
    total += eta_sq;
  }
  out.global = std::sqrt(total);
  return out;
}

/// eta_T for a single triangle.
inline double local_estimator(const TriMesh& mesh, const Vector& u,
                              double lambda, int triangle) {
  EstimatorBreakdown all = estimate_error(mesh, u, lambda);
  return all.eta[triangle];
}

/// Root-sum-square of per-triangle indicators.
inline double global_estimator(std::span<const double> eta) {
  double total = 0.0;
  for (double e : eta) total += e * e;
  return std::sqrt(total);
}

}  // namespace bmg
