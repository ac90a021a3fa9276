// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "bmg/error.hpp"

namespace bmg {

using Vec3 = Eigen::Vector3d;

/// Map from R^3\{0} onto the target surface. Must be idempotent.
using SurfaceProjector = std::function<Vec3(const Vec3&)>;

inline SurfaceProjector sphere_projector() {
  return [](const Vec3& x) -> Vec3 {
    double n = x.norm();
    if (n == 0.0) throw NumericalError("sphere projector: zero vector");
    return x / n;
  };
}

inline SurfaceProjector identity_projector() {
  return [](const Vec3& x) -> Vec3 { return x; };
}

/// Triangulated surface for one hierarchy level. Vertices inherited from the
/// parent mesh come first; vertices created by refinement follow, and
/// parent_edges[j] holds the coarse endpoints of the edge that spawned
/// vertex (new_vertex_begin() + j).
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  int level = 0;
  std::vector<std::array<int, 2>> parent_edges;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  int new_vertex_begin() const {
    return vertex_count() - static_cast<int>(parent_edges.size());
  }
};

struct MeshStats {
  double h_max = 0.0;
  double h_min = 0.0;
  double total_area = 0.0;
  double min_quality = 0.0;  // min over triangles of inradius/circumradius
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

inline Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 n = (b - a).cross(c - a);
  double len = n.norm();
  if (len == 0.0) throw NumericalError("degenerate triangle has no normal");
  return n / len;
}

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

inline std::unordered_map<std::uint64_t, int> edge_use_counts(
    const TriMesh& mesh) {
  std::unordered_map<std::uint64_t, int> counts;
  counts.reserve(mesh.triangles.size() * 3);
  for (const auto& t : mesh.triangles) {
    counts[edge_key(t[0], t[1])]++;
    counts[edge_key(t[1], t[2])]++;
    counts[edge_key(t[2], t[0])]++;
  }
  return counts;
}

}  // namespace detail

inline int edge_count(const TriMesh& mesh) {
  return static_cast<int>(detail::edge_use_counts(mesh).size());
}

inline int euler_characteristic(const TriMesh& mesh) {
  return mesh.vertex_count() - edge_count(mesh) + mesh.triangle_count();
}

/// True when every edge is shared by exactly two triangles.
inline bool is_closed(const TriMesh& mesh) {
  for (const auto& [key, count] : detail::edge_use_counts(mesh))
    if (count != 2) return false;
  return !mesh.triangles.empty();
}

/// Six times the volume enclosed by an (outward oriented) closed mesh.
inline double signed_volume(const TriMesh& mesh) {
  double v = 0.0;
  for (const auto& t : mesh.triangles)
    v += mesh.vertices[t[0]].cross(mesh.vertices[t[1]])
             .dot(mesh.vertices[t[2]]);
  return v / 6.0;
}

/// Structural checks shared by the generators, the loader, and the solvers.
/// Closedness and outward orientation are only required when asked for;
/// refinement itself also works on patches with boundary.
inline void check_mesh(const TriMesh& mesh, bool require_closed) {
  int nv = mesh.vertex_count();
  if (nv == 0 || mesh.triangles.empty())
    throw NumericalError("mesh: empty vertex or triangle list");
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    for (int k = 0; k < 3; ++k)
      if (t[k] < 0 || t[k] >= nv)
        throw NumericalError("mesh: triangle " + std::to_string(i) +
                             " references vertex " + std::to_string(t[k]) +
                             " out of range");
    if (t[0] == t[1] || t[1] == t[2] || t[2] == t[0])
      throw NumericalError("mesh: triangle " + std::to_string(i) +
                           " has repeated vertices");
  }
  double h_max = 0.0;
  for (const auto& t : mesh.triangles) {
    h_max = std::max({h_max, (mesh.vertices[t[0]] - mesh.vertices[t[1]]).norm(),
                      (mesh.vertices[t[1]] - mesh.vertices[t[2]]).norm(),
                      (mesh.vertices[t[2]] - mesh.vertices[t[0]]).norm()});
  }
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    double area = triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]],
                                mesh.vertices[t[2]]);
    if (area <= 1e-14 * h_max * h_max)
      throw NumericalError("mesh: degenerate triangle " + std::to_string(i) +
                           " (area " + std::to_string(area) + ")");
  }
  for (const auto& [key, count] : detail::edge_use_counts(mesh)) {
    if (count > 2)
      throw NumericalError("mesh: non-manifold edge shared by " +
                           std::to_string(count) + " triangles");
    if (require_closed && count != 2)
      throw NumericalError("mesh: boundary edge on a mesh required closed");
  }
  if (require_closed && signed_volume(mesh) <= 0.0)
    throw NumericalError("mesh: inconsistent or inward orientation");
}

/// Regular octahedron inscribed in the unit sphere, outward oriented.
inline TriMesh make_octahedron() {
  TriMesh m;
  m.vertices = {Vec3(1, 0, 0),  Vec3(-1, 0, 0), Vec3(0, 1, 0),
                Vec3(0, -1, 0), Vec3(0, 0, 1),  Vec3(0, 0, -1)};
  m.triangles = {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                 {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  return m;
}

/// Regular icosahedron inscribed in the unit sphere, outward oriented.
inline TriMesh make_icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh m;
  m.vertices = {Vec3(-1, t, 0), Vec3(1, t, 0),  Vec3(-1, -t, 0),
                Vec3(1, -t, 0), Vec3(0, -1, t), Vec3(0, 1, t),
                Vec3(0, -1, -t), Vec3(0, 1, -t), Vec3(t, 0, -1),
                Vec3(t, 0, 1),  Vec3(-t, 0, -1), Vec3(-t, 0, 1)};
  for (Vec3& v : m.vertices) v.normalize();
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  return m;
}

/// Uniform 1-to-4 refinement. Each edge midpoint is pushed onto the surface
/// by the projector; coarse vertices keep their indices as a prefix of the
/// fine vertex list so prolongations get the block structure [I; B].
inline TriMesh refine(const TriMesh& mesh, const SurfaceProjector& projector) {
  for (const auto& [key, count] : detail::edge_use_counts(mesh))
    if (count > 2)
      throw NumericalError("refine: non-manifold edge shared by " +
                           std::to_string(count) + " triangles");
  TriMesh fine;
  fine.level = mesh.level + 1;
  fine.vertices = mesh.vertices;
  fine.triangles.reserve(mesh.triangles.size() * 4);
  std::unordered_map<std::uint64_t, int> midpoint;
  midpoint.reserve(mesh.triangles.size() * 2);
  auto midpoint_of = [&](int a, int b) -> int {
    std::uint64_t key = detail::edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    Vec3 p = projector(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    int idx = fine.vertex_count();
    fine.vertices.push_back(p);
    fine.parent_edges.push_back({std::min(a, b), std::max(a, b)});
    midpoint.emplace(key, idx);
    return idx;
  };
  for (const auto& t : mesh.triangles) {
    int ab = midpoint_of(t[0], t[1]);
    int bc = midpoint_of(t[1], t[2]);
    int ca = midpoint_of(t[2], t[0]);
    fine.triangles.push_back({t[0], ab, ca});
    fine.triangles.push_back({ab, t[1], bc});
    fine.triangles.push_back({ca, bc, t[2]});
    fine.triangles.push_back({ab, bc, ca});
  }
  return fine;
}

inline MeshStats mesh_stats(const TriMesh& mesh) {
  MeshStats s;
  s.h_min = std::numeric_limits<double>::infinity();
  s.min_quality = std::numeric_limits<double>::infinity();
  for (const auto& t : mesh.triangles) {
    const Vec3& p0 = mesh.vertices[t[0]];
    const Vec3& p1 = mesh.vertices[t[1]];
    const Vec3& p2 = mesh.vertices[t[2]];
    double a = (p1 - p2).norm();
    double b = (p2 - p0).norm();
    double c = (p0 - p1).norm();
    double diam = std::max({a, b, c});
    double area = triangle_area(p0, p1, p2);
    if (area <= 0.0) throw NumericalError("mesh_stats: degenerate triangle");
    double s_half = 0.5 * (a + b + c);
    double inradius = area / s_half;
    double circumradius = a * b * c / (4.0 * area);
    s.h_max = std::max(s.h_max, diam);
    s.h_min = std::min(s.h_min, diam);
    s.total_area += area;
    s.min_quality = std::min(s.min_quality, inradius / circumradius);
  }
  return s;
}

/// Writes the documented OFF layout: "OFF", then "V F E", then V coordinate
/// lines, then F lines "3 i j k" with 0-based indices. Coordinates carry
/// 17 significant digits so save/load round-trips bit-exactly.
inline void save_mesh(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "OFF\n";
  out << mesh.vertex_count() << " " << mesh.triangle_count() << " "
      << edge_count(mesh) << "\n";
  out.precision(17);
  for (const Vec3& v : mesh.vertices)
    out << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& t : mesh.triangles)
    out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  if (!out) throw IoError("write failed: " + path);
}

/// Loads the OFF layout written by save_mesh. When a projector is given,
/// vertices are snapped onto the surface after reading. The result is
/// validated as a closed, outward-oriented level-0 mesh.
inline TriMesh load_mesh(const std::string& path,
                         const SurfaceProjector* snap = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  auto fail = [&](int lineno, const std::string& what) -> IoError {
    return IoError(path + ":" + std::to_string(lineno) + ": " + what);
  };
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> std::string {
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t start = line.find_first_not_of(" \t\r");
      if (start == std::string::npos || line[start] == '#') continue;
      return line;
    }
    throw fail(lineno + 1, "unexpected end of file");
  };
  if (next_line().substr(0, 3) != "OFF") throw fail(lineno, "missing OFF header");
  std::istringstream counts(next_line());
  long nv = 0, nf = 0, ne = 0;
  if (!(counts >> nv >> nf >> ne) || nv <= 0 || nf <= 0)
    throw fail(lineno, "malformed counts line (need 'V F E')");
  TriMesh mesh;
  mesh.vertices.reserve(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    std::istringstream vs(next_line());
    double x = 0, y = 0, z = 0;
    if (!(vs >> x >> y >> z)) throw fail(lineno, "malformed vertex line");
    mesh.vertices.emplace_back(x, y, z);
  }
  mesh.triangles.reserve(static_cast<std::size_t>(nf));
  for (long i = 0; i < nf; ++i) {
    std::istringstream fs(next_line());
    int sides = 0;
    if (!(fs >> sides)) throw fail(lineno, "malformed face line");
    if (sides != 3)
      throw fail(lineno, "face " + std::to_string(i) + " has " +
                             std::to_string(sides) +
                             " vertices, only triangles are supported");
    int a = 0, b = 0, c = 0;
    if (!(fs >> a >> b >> c)) throw fail(lineno, "malformed face line");
    for (int idx : {a, b, c})
      if (idx < 0 || idx >= nv)
        throw fail(lineno, "vertex index " + std::to_string(idx) +
                               " out of range");
    mesh.triangles.push_back({a, b, c});
  }
  if (snap)
    for (Vec3& v : mesh.vertices) v = (*snap)(v);
  check_mesh(mesh, /*require_closed=*/true);
  return mesh;
}

}  // namespace bmg
