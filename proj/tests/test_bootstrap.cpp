// Copyright (c) the bmg authors.
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "bmg/bootstrap.hpp"
#include "bmg/validation.hpp"
#include "test_util.hpp"

using namespace bmg;
using Catch::Approx;

using testutil::octa_hierarchy;

namespace {

EigenSet synthetic_set(std::vector<double> values, double shift = 0.0) {
  EigenSet s;
  s.vectors = Eigen::MatrixXd::Identity(static_cast<int>(values.size()),
                                        static_cast<int>(values.size()));
  s.values = std::move(values);
  s.shift = shift;
  return s;
}

}  // namespace

TEST_CASE("enrichment selection policies", "[bootstrap]") {
  EigenSet set = synthetic_set({0.0, 2.0, 2.1, 5.9, 6.0, 6.1, 11.8, 12.0,
                                12.2, 19.5, 20.0, 20.5, 29.0, 30.0, 31.0,
                                41.0, 42.0, 43.0, 55.0, 56.0});

  SECTION("near policy with infinite tolerance and cap keeps the smallest") {
    auto sel = select_near(set, 0.0, std::numeric_limits<double>::infinity(),
                           20);
    REQUIRE(sel.size() == 20);
    for (int i = 0; i < 20; ++i) CHECK(sel[i] == i);
    auto capped = select_near(set, 0.0,
                              std::numeric_limits<double>::infinity(), 5);
    CHECK(capped == std::vector<int>{0, 1, 2, 3, 4});
  }
  SECTION("near policy centers on the shift") {
    auto sel = select_near(set, 20.0, 3.0, 10);
    CHECK(sel == std::vector<int>{9, 10, 11});
  }
  SECTION("near policy accounts for the pencil shift") {
    EigenSet shifted = synthetic_set({-12.0, -2.0, 0.3, 10.0}, 32.0);
    // positions in the unshifted spectrum: 20, 30, 32.3, 42
    auto sel = select_near(shifted, 32.0, 5.0, 2);
    CHECK(sel == std::vector<int>{1, 2});
  }
  SECTION("empty selection is an error") {
    CHECK_THROWS_AS(select_near(set, 100.0, 0.5, 5), NumericalError);
  }
  SECTION("window policy") {
    EigenSet big = synthetic_set(std::vector<double>(60, 1.0));
    auto sel = select_window(big, 37, 12);
    REQUIRE(sel.size() == 12);
    CHECK(sel.front() == 25);  // 1-based 26
    CHECK(sel.back() == 36);   // 1-based 37
    CHECK_THROWS_AS(select_window(big, 5, 12), NumericalError);
  }
  SECTION("largest policy") {
    auto sel = select_largest(set, 17);
    REQUIRE(sel.size() == 17);
    CHECK(sel.front() == 3);
    CHECK(sel.back() == 19);
  }
}

TEST_CASE("shift update rule", "[bootstrap]") {
  std::vector<double> zeros(4, 0.0);
  CHECK(update_shift(32.0, zeros) == 32.0);
  std::vector<double> quotients = {-8.0, -6.0, -7.0};
  CHECK(update_shift(32.0, quotients) == Approx(25.0));
  CHECK_THROWS_AS(update_shift(1.0, std::vector<double>{}), NumericalError);
}

TEST_CASE("enriched system construction", "[bootstrap]") {
  const Hierarchy& hier = octa_hierarchy(0, 2);
  const AssembledForms& coarse = hier.forms(0);
  const AssembledForms& fine = hier.forms(1);
  SparseMatrix p = hier.compose(0, 1);

  SECTION("empty enrichment reduces to the coarse pencil") {
    EnrichedSystem sys = build_enriched_system(coarse, fine, p,
                                               Eigen::MatrixXd(18, 0));
    CHECK(sys.total_dim() == 6);
    CHECK((sys.a_block - coarse.stiffness.to_dense()).norm() == 0.0);
    CHECK((sys.m_block - coarse.mass.to_dense()).norm() == 0.0);
    EigenSet via_block = enriched_eigensolve(sys, 0.0);
    EigenSet direct = coarse_eigensolve(coarse, 0.0, 6);
    for (int i = 0; i < 6; ++i)
      CHECK(via_block.values[i] == Approx(direct.values[i]).margin(1e-12));
  }

  SECTION("blocks match dense products for actual enrichment vectors") {
    EigenSet cset = coarse_eigensolve(coarse, 0.0, 3);
    Vector prolonged = prolong(hier.up(0), cset.vectors.col(1));
    Vector u = fine_source_solve(fine, 0.0, cset.values[1], prolonged,
                                 SourceSolve::direct());
    OrthonormalizeResult ortho =
        b_orthonormalize(Eigen::MatrixXd(u), fine.mass);
    REQUIRE(ortho.vectors.cols() == 1);
    EnrichedSystem sys = build_enriched_system(coarse, fine, p, ortho.vectors);

    Eigen::MatrixXd pd = p.to_dense();
    Eigen::MatrixXd af = fine.stiffness.to_dense();
    Eigen::MatrixXd mf = fine.mass.to_dense();
    const Eigen::MatrixXd& ub = ortho.vectors;

    // the three fine-derived blocks equal the dense products; the top-left
    // block is the coarse assembly, which differs from P^T A_f P because the
    // spaces are non-nested
    CHECK((sys.a_block.topRightCorner(6, 1) - pd.transpose() * af * ub).norm() <
          1e-12);
    CHECK((sys.a_block.bottomLeftCorner(1, 6) -
           (pd.transpose() * af * ub).transpose()).norm() < 1e-12);
    CHECK((sys.a_block.bottomRightCorner(1, 1) -
           ub.transpose() * af * ub).norm() < 1e-12);
    CHECK((sys.m_block.topRightCorner(6, 1) - pd.transpose() * mf * ub).norm() <
          1e-12);
    CHECK((sys.m_block.bottomRightCorner(1, 1) -
           ub.transpose() * mf * ub).norm() < 1e-12);
    CHECK((sys.a_block.topLeftCorner(6, 6) -
           pd.transpose() * af * pd).norm() > 1e-6);

    SECTION("block symmetry is exact") {
      CHECK((sys.a_block - sys.a_block.transpose()).norm() == 0.0);
      CHECK((sys.m_block - sys.m_block.transpose()).norm() == 0.0);
    }
    SECTION("expansion maps block coordinates to the fine space") {
      Vector c = testutil::random_vector(7, testutil::rng());
      Eigen::MatrixXd expanded = expand_to_fine(sys, Eigen::MatrixXd(c));
      Vector manual = pd * c.head(6) + ub * c.tail(1);
      CHECK((expanded.col(0) - manual).norm() < 1e-14);
    }
  }

  SECTION("enrichment dependent on the coarse space is diagnosed") {
    EigenSet cset = coarse_eigensolve(coarse, 0.0, 2);
    Vector dependent = prolong(hier.up(0), cset.vectors.col(1));
    dependent /= std::sqrt(dependent.dot(fine.mass.apply(dependent)));
    EnrichedSystem sys =
        build_enriched_system(coarse, fine, p, Eigen::MatrixXd(dependent));
    try {
      enriched_eigensolve(sys, 0.0);
      FAIL("expected a near-dependence diagnosis");
    } catch (const NumericalError& e) {
      std::string msg = e.what();
      CHECK(msg.find("dependent") != std::string::npos);
      CHECK(msg.find("[0]") != std::string::npos);
    }
  }
}

TEST_CASE("enriched space lowers the Ritz values", "[bootstrap]") {
  // Courant-Fischer oracle: Ritz values of the fine pencil on span[P | U]
  // are pairwise below those on span[P]
  const Hierarchy& hier = octa_hierarchy(0, 2);
  const AssembledForms& fine = hier.forms(1);
  SparseMatrix p = hier.compose(0, 1);
  EigenSet cset = coarse_eigensolve(hier.forms(0), 0.0, 6);
  std::vector<Vector> us;
  for (int i = 1; i <= 3; ++i) {
    Vector prolonged = prolong(hier.up(0), cset.vectors.col(i));
    us.push_back(fine_source_solve(fine, 0.0, cset.values[i], prolonged,
                                   SourceSolve::direct()));
  }
  Eigen::MatrixXd pd = p.to_dense();
  Eigen::MatrixXd basis_small = pd;
  Eigen::MatrixXd basis_big(18, 6 + 3);
  basis_big.leftCols(6) = pd;
  for (int j = 0; j < 3; ++j) basis_big.col(6 + j) = us[j];

  Eigen::MatrixXd af = fine.stiffness.to_dense();
  Eigen::MatrixXd mf = fine.mass.to_dense();
  auto ritz = [&](const Eigen::MatrixXd& basis) {
    EigenSet r = dense_generalized_eig(basis.transpose() * af * basis,
                                       basis.transpose() * mf * basis);
    return r.values;
  };
  std::vector<double> small = ritz(basis_small);
  std::vector<double> big = ritz(basis_big);
  for (std::size_t i = 0; i < small.size(); ++i)
    CHECK(big[i] <= small[i] + 1e-11);
}

TEST_CASE("v-cycle at depth one matches the hand-rolled two-grid bootstrap",
          "[bootstrap]") {
  // coarse mesh at paper scale (66 unknowns); much coarser meshes distort
  // the block mass matrix past positive definiteness
  const Hierarchy& hier = octa_hierarchy(2, 2);
  BootstrapOptions opts;
  opts.mu0 = 0.0;
  opts.enrichment.policy = EnrichmentPolicy::NearShift;
  opts.enrichment.dim = 5;
  BootstrapState state = bootstrap_init(hier, opts);
  bootstrap_vcycle(state, 1);

  // the same steps through the public primitives
  EigenSet coarse = coarse_eigensolve(hier.forms(0), 0.0, hier.dof(0));
  auto lambda = select_near(coarse, 0.0,
                            std::numeric_limits<double>::infinity(), 5);
  std::vector<Vector> sources;
  for (int idx : lambda) {
    if (std::abs(coarse.values[idx]) < 1e-12) continue;  // kernel: no new info
    Vector prolonged = prolong(hier.up(0), coarse.vectors.col(idx));
    sources.push_back(fine_source_solve(hier.forms(1), 0.0, coarse.values[idx],
                                        prolonged, SourceSolve::direct()));
  }
  Eigen::MatrixXd block(hier.dof(1), static_cast<int>(sources.size()));
  for (std::size_t j = 0; j < sources.size(); ++j)
    block.col(static_cast<int>(j)) = sources[j];
  OrthonormalizeResult ortho = b_orthonormalize(block, hier.forms(1).mass);
  EnrichedSystem sys = build_enriched_system(
      hier.forms(0), hier.forms(1), hier.compose(0, 1), ortho.vectors);
  EigenSet expected = enriched_eigensolve(sys, 0.0);

  REQUIRE(state.history.size() == 1);
  const CycleRecord& rec = state.history[0];
  CHECK(rec.skipped == std::vector<int>{0});
  REQUIRE(rec.spectrum.size() == expected.values.size());
  for (std::size_t i = 0; i < expected.values.size(); ++i)
    CHECK(rec.spectrum[i] == Approx(expected.values[i]).margin(1e-12));
}

TEST_CASE("bfmg recovers the low spectrum", "[bootstrap]") {
  const Hierarchy& hier = octa_hierarchy(2, 3);
  BootstrapOptions opts;
  opts.enrichment.policy = EnrichmentPolicy::NearShift;
  opts.enrichment.dim = 6;
  BfmgResult result = bfmg(hier, opts, 3);
  REQUIRE(result.history.size() == 2);
  // X columns approximate the 2-cluster (and part of the 6-cluster); the
  // kernel pair is carried by the coarse block
  const std::vector<double>& final_spectrum = result.history.back().spectrum;
  CHECK(final_spectrum[0] == Approx(0.0).margin(1e-9));
  for (int i = 1; i <= 3; ++i)
    CHECK(std::abs(final_spectrum[i] - 2.0) / 2.0 < 0.05);
  // final source approximations carry Rayleigh quotients near the clusters
  for (double v : result.final_set.values) CHECK(v > 0.5);

  SECTION("cycles ascend one level at a time") {
    BootstrapState state = bootstrap_init(hier, opts);
    CHECK_THROWS_AS(bootstrap_vcycle(state, 2), NumericalError);
  }
}

TEST_CASE("bfmg with gauss-seidel smoothing stays close to direct",
          "[bootstrap]") {
  const Hierarchy& hier = octa_hierarchy(2, 3);
  BootstrapOptions direct;
  direct.enrichment.dim = 6;
  BootstrapOptions smoothed = direct;
  smoothed.ascent_solver = SourceSolve::gauss_seidel(1);
  smoothed.top_solver = SourceSolve::gauss_seidel(1);
  BfmgResult a = bfmg(hier, direct, 3);
  BfmgResult b = bfmg(hier, smoothed, 3);
  for (int i = 1; i <= 3; ++i) {
    double da = std::abs(a.history.back().spectrum[i] - 2.0);
    double db = std::abs(b.history.back().spectrum[i] - 2.0);
    CHECK(db < 10.0 * da + 0.05);  // smoothing tracks the direct variant
  }
}
