// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "bmg/error.hpp"

namespace bmg {

/// One distinct eigenvalue of the Laplace-Beltrami operator on the unit
/// sphere: lambda = l(l+1) with multiplicity 2l+1. Index ranges are 1-based
/// positions in the full spectrum counted with multiplicity.
struct SpectrumEntry {
  int l = 0;
  double lambda = 0.0;
  int multiplicity = 1;
  int first_index = 1;
  int last_index = 1;
};

struct ExactSpectrum {
  std::vector<SpectrumEntry> entries;
};

inline ExactSpectrum sphere_spectrum(int l_max) {
  if (l_max < 0) throw NumericalError("sphere spectrum: negative l_max");
  ExactSpectrum s;
  int next_index = 1;
  for (int l = 0; l <= l_max; ++l) {
    SpectrumEntry e;
    e.l = l;
    e.lambda = static_cast<double>(l) * (l + 1);
    e.multiplicity = 2 * l + 1;
    e.first_index = next_index;
    e.last_index = next_index + e.multiplicity - 1;
    next_index = e.last_index + 1;
    s.entries.push_back(e);
  }
  return s;
}

struct ClusterMatch {
  double lambda = 0.0;
  int multiplicity = 0;
  int matched_count = 0;
  double mean_rel_error = 0.0;
  double max_rel_error = 0.0;
  std::vector<double> matched_values;
  bool loss = false;  // matched_count < multiplicity
};

struct ClusterReport {
  std::vector<ClusterMatch> clusters;
  std::vector<double> unmatched;
};

namespace detail {

inline double rel_distance(double computed, double exact) {
  return std::abs(computed - exact) / std::max(std::abs(exact), 1.0);
}

}  // namespace detail

/// Assigns every computed value to its nearest exact eigenvalue when the
/// relative distance (measured against max(|lambda|, 1) so the zero mode is
/// well defined) stays below rel_tol; flags clusters that catch fewer values
/// than their multiplicity.
inline ClusterReport match_spectrum(const std::vector<double>& computed,
                                    const ExactSpectrum& exact,
                                    double rel_tol) {
  if (rel_tol <= 0.0 || rel_tol >= 0.5)
    throw NumericalError("match_spectrum: rel_tol must lie in (0, 0.5)");
  ClusterReport report;
  report.clusters.reserve(exact.entries.size());
  for (const SpectrumEntry& e : exact.entries) {
    ClusterMatch m;
    m.lambda = e.lambda;
    m.multiplicity = e.multiplicity;
    report.clusters.push_back(m);
  }
  for (double value : computed) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < exact.entries.size(); ++i) {
      double d = detail::rel_distance(value, exact.entries[i].lambda);
      if (d < best) {
        best = d;
        best_idx = i;
      }
    }
    if (best < rel_tol) {
      ClusterMatch& m = report.clusters[best_idx];
      m.matched_count += 1;
      m.matched_values.push_back(value);
      m.mean_rel_error += best;
      m.max_rel_error = std::max(m.max_rel_error, best);
    } else {
      report.unmatched.push_back(value);
    }
  }
  for (ClusterMatch& m : report.clusters) {
    if (m.matched_count > 0) m.mean_rel_error /= m.matched_count;
    m.loss = m.matched_count < m.multiplicity;
  }
  return report;
}

struct RateFit {
  double rate = 0.0;          // r in error ~ C dof^(-r)
  double fit_residual = 0.0;  // rms residual of the log-log fit
  std::vector<std::pair<double, double>> samples;  // (dof, error) used
  std::vector<int> excluded;  // input positions dropped (non-positive error)
};

/// Ordinary least squares on log(error) against log(dof); the rate is the
/// negated slope. Samples with non-positive error (exact hits) are excluded
/// and reported. At least three usable samples are required.
inline RateFit fit_rate(const std::vector<std::pair<double, double>>& samples) {
  RateFit fit;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto [dof, error] = samples[i];
    if (dof <= 0.0) throw NumericalError("fit_rate: non-positive dof");
    if (error <= 0.0) {
      fit.excluded.push_back(static_cast<int>(i));
      continue;
    }
    xs.push_back(std::log(dof));
    ys.push_back(std::log(error));
    fit.samples.push_back(samples[i]);
  }
  if (xs.size() < 3)
    throw NumericalError("fit_rate: need at least 3 positive samples, have " +
                         std::to_string(xs.size()));
  double n = static_cast<double>(xs.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
    sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
  }
  if (sxx == 0.0) throw NumericalError("fit_rate: all dof values equal");
  double slope = sxy / sxx;
  double intercept = mean_y - slope * mean_x;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double r = ys[i] - (slope * xs[i] + intercept);
    ss += r * r;
  }
  fit.rate = -slope;
  fit.fit_residual = std::sqrt(ss / n);
  return fit;
}

}  // namespace bmg
