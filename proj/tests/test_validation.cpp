// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "bmg/validation.hpp"

using namespace bmg;
using Catch::Approx;

TEST_CASE("sphere spectrum closed forms", "[validation]") {
  ExactSpectrum s = sphere_spectrum(9);
  REQUIRE(s.entries.size() == 10);
  CHECK(s.entries[0].lambda == 0.0);
  CHECK(s.entries[0].multiplicity == 1);
  CHECK(s.entries[1].lambda == 2.0);
  CHECK(s.entries[1].multiplicity == 3);
  CHECK(s.entries[2].lambda == 6.0);
  CHECK(s.entries[2].multiplicity == 5);
  CHECK(s.entries[5].lambda == 30.0);
  CHECK(s.entries[5].multiplicity == 11);

  SECTION("cumulative 1-based index ranges") {
    CHECK(s.entries[5].first_index == 26);  // lambda = 30
    CHECK(s.entries[5].last_index == 36);
    CHECK(s.entries[6].first_index == 37);  // lambda = 42
    CHECK(s.entries[6].last_index == 49);
    CHECK(s.entries[7].first_index == 50);  // lambda = 56
    CHECK(s.entries[7].last_index == 64);
    CHECK(s.entries[8].first_index == 65);  // lambda = 72
    CHECK(s.entries[8].last_index == 81);
  }
  SECTION("multiplicities are odd and increase by two") {
    for (std::size_t i = 1; i < s.entries.size(); ++i) {
      CHECK(s.entries[i].multiplicity % 2 == 1);
      CHECK(s.entries[i].multiplicity == s.entries[i - 1].multiplicity + 2);
      CHECK(s.entries[i].lambda > s.entries[i - 1].lambda);
    }
  }
}

TEST_CASE("spectrum matching", "[validation]") {
  ExactSpectrum exact = sphere_spectrum(7);

  SECTION("exact values all match with zero error") {
    std::vector<double> computed;
    for (const auto& e : exact.entries)
      for (int i = 0; i < e.multiplicity; ++i) computed.push_back(e.lambda);
    ClusterReport report = match_spectrum(computed, exact, 0.15);
    CHECK(report.unmatched.empty());
    for (const auto& c : report.clusters) {
      CHECK(c.matched_count == c.multiplicity);
      CHECK(!c.loss);
      CHECK(c.max_rel_error == 0.0);
    }
  }
  SECTION("partial clusters raise loss flags") {
    std::vector<double> computed;
    for (int i = 0; i < 8; ++i) computed.push_back(30.0 + 0.5 * i / 8.0);
    for (int i = 0; i < 4; ++i) computed.push_back(42.0 - 0.3 * i / 4.0);
    computed.push_back(500.0);  // unmatched stray
    ClusterReport report = match_spectrum(computed, exact, 0.15);
    const ClusterMatch& c30 = report.clusters[5];
    const ClusterMatch& c42 = report.clusters[6];
    CHECK(c30.matched_count == 8);
    CHECK(c30.loss);
    CHECK(c42.matched_count == 4);
    CHECK(c42.loss);
    REQUIRE(report.unmatched.size() == 1);
    CHECK(report.unmatched[0] == 500.0);
  }
  SECTION("matching is permutation invariant") {
    std::vector<double> computed = {0.01, 2.1, 1.95, 2.0, 6.3, 5.8,
                                    12.4, 30.2, 29.5, 41.0};
    ClusterReport a = match_spectrum(computed, exact, 0.15);
    std::mt19937 gen(3);
    std::shuffle(computed.begin(), computed.end(), gen);
    ClusterReport b = match_spectrum(computed, exact, 0.15);
    REQUIRE(a.clusters.size() == b.clusters.size());
    for (std::size_t i = 0; i < a.clusters.size(); ++i) {
      CHECK(a.clusters[i].matched_count == b.clusters[i].matched_count);
      CHECK(a.clusters[i].max_rel_error ==
            Approx(b.clusters[i].max_rel_error).margin(1e-15));
    }
    CHECK(a.unmatched.size() == b.unmatched.size());
  }
  SECTION("zero eigenvalue uses the absolute scale") {
    ClusterReport report = match_spectrum({0.05}, exact, 0.15);
    CHECK(report.clusters[0].matched_count == 1);
    ClusterReport miss = match_spectrum({0.4}, exact, 0.15);
    CHECK(miss.clusters[0].matched_count == 0);
  }
  SECTION("tolerance domain") {
    CHECK_THROWS_AS(match_spectrum({1.0}, exact, 0.6), NumericalError);
    CHECK_THROWS_AS(match_spectrum({1.0}, exact, 0.0), NumericalError);
  }
}

TEST_CASE("rate fitting", "[validation]") {
  SECTION("exact power laws") {
    std::vector<std::pair<double, double>> one, half;
    for (double dof : {100.0, 400.0, 1600.0, 6400.0}) {
      one.push_back({dof, 7.0 / dof});
      half.push_back({dof, 3.0 / std::sqrt(dof)});
    }
    CHECK(fit_rate(one).rate == Approx(1.0).margin(1e-10));
    CHECK(fit_rate(half).rate == Approx(0.5).margin(1e-10));
    CHECK(fit_rate(one).fit_residual < 1e-12);
  }
  SECTION("scaling the errors leaves the rate unchanged") {
    std::vector<std::pair<double, double>> base = {
        {100.0, 0.5}, {400.0, 0.11}, {1600.0, 0.034}, {6400.0, 0.008}};
    std::vector<std::pair<double, double>> scaled = base;
    for (auto& s : scaled) s.second *= 137.0;
    CHECK(fit_rate(base).rate == Approx(fit_rate(scaled).rate).margin(1e-12));
  }
  SECTION("exact hits are excluded and reported") {
    std::vector<std::pair<double, double>> samples = {
        {100.0, 1e-2}, {400.0, 0.0}, {1600.0, 6.25e-4}, {6400.0, 1.5625e-4},
        {25600.0, 3.90625e-5}};
    RateFit fit = fit_rate(samples);
    REQUIRE(fit.excluded.size() == 1);
    CHECK(fit.excluded[0] == 1);
    CHECK(fit.samples.size() == 4);
    CHECK(fit.rate == Approx(1.0).margin(1e-10));
  }
  SECTION("too few samples") {
    CHECK_THROWS_AS(fit_rate({{100.0, 1.0}, {200.0, 0.5}}), NumericalError);
  }
}
