// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace bmg {

/// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed files, unreadable paths, bad on-disk formats.
class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Invalid experiment configuration (unknown keys, out-of-range values).
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Numerical failures: dimension mismatches, degenerate geometry,
/// rank deficiency, non-SPD mass matrices.
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

/// A shifted system was singular to working tolerance. Carries the
/// measured amplification so callers can decide to perturb the shift.
class SingularSystemError : public NumericalError {
public:
  SingularSystemError(const std::string& msg, double amplification)
      : NumericalError(msg), amplification_(amplification) {}
  double amplification() const { return amplification_; }

private:
  double amplification_;
};

}  // namespace bmg
