// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>

#include "bmg/sparse.hpp"

namespace bmg {

namespace detail {

template <class Op>
double row_dot(const Op& op, int r, const Vector& x) {
  double acc = 0.0;
  for_each_in_row(op, r, [&](int c, double v) { acc += v * x[c]; });
  return acc;
}

template <class Op>
double row_squared_norm(const Op& op, int r) {
  double acc = 0.0;
  for_each_in_row(op, r, [&](int, double v) { acc += v * v; });
  return acc;
}

}  // namespace detail

/// Symmetric Gauss-Seidel: each sweep is one forward pass followed by one
/// backward pass over the rows. sweeps == 0 returns x0 unchanged. Strictly
/// sequential; the result is defined by the row order.
template <class Op>
Vector gauss_seidel(const Op& op, const Vector& b, const Vector& x0,
                    int sweeps) {
  int n = op.rows();
  if (op.cols() != n) throw NumericalError("gauss_seidel: matrix not square");
  if (b.size() != n || x0.size() != n)
    throw NumericalError("gauss_seidel: vector length mismatch");
  Vector x = x0;
  auto update = [&](int i) {
    double d = op.diagonal(i);
    if (d == 0.0)
      throw NumericalError("gauss_seidel: zero diagonal at row " +
                           std::to_string(i));
    x[i] += (b[i] - detail::row_dot(op, i, x)) / d;
  };
  for (int s = 0; s < sweeps; ++s) {
    for (int i = 0; i < n; ++i) update(i);
    for (int i = n - 1; i >= 0; --i) update(i);
  }
  return x;
}

/// Cyclic Kaczmarz relaxation: for each row i in ascending order,
/// x <- x + (b_i - <a_i, x>) / |a_i|^2 * a_i. Well defined for the
/// indefinite shifted systems where Gauss-Seidel may hit zero diagonals.
template <class Op>
Vector kaczmarz(const Op& op, const Vector& b, const Vector& x0, int sweeps) {
  int n = op.rows();
  if (op.cols() != n) throw NumericalError("kaczmarz: matrix not square");
  if (b.size() != n || x0.size() != n)
    throw NumericalError("kaczmarz: vector length mismatch");
  Vector x = x0;
  for (int s = 0; s < sweeps; ++s) {
    for (int i = 0; i < n; ++i) {
      double norm2 = detail::row_squared_norm(op, i);
      if (norm2 == 0.0)
        throw NumericalError("kaczmarz: zero row " + std::to_string(i));
      double scale = (b[i] - detail::row_dot(op, i, x)) / norm2;
      for_each_in_row(op, i, [&](int c, double v) { x[c] += scale * v; });
    }
  }
  return x;
}

}  // namespace bmg
