#include <cmath>

#include "doctest.h"
#include "vbl/birman_schwinger.hpp"
#include "vbl/errors.hpp"

using namespace vbl;

namespace {

PerturbationSpec unit_box() { return PerturbationSpec::box(1, {0, 0, 0}, {0.5, 0.5, 0.5}); }
PotentialSpec mathieu() { return PotentialSpec::cosine_sum(1, {{{1, 0, 0}, 1.0}}); }

Eigen::MatrixXd dense_resolvent(const TruncatedH0& h0, double lambda) {
  Eigen::MatrixXd a = Eigen::MatrixXd(h0.matrix);
  a.diagonal().array() -= lambda;
  return a.inverse();
}

}  // namespace

TEST_CASE("single-site perturbation is the discrete Green function") {
  const TruncatedH0 h0 = build_truncated_h0(PotentialSpec::zero(1), 4, 1.0 / 16);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(h0.size());
  const int site = 37;
  w[site] = 2.5;
  for (double lambda : {-0.3, -1e-3}) {
    const BSOperator x = assemble_bs(h0, w, lambda);
    REQUIRE(x.matrix.rows() == 1);
    CHECK(x.support == std::vector<int>{site});
    const double g = dense_resolvent(h0, lambda)(site, site);
    CHECK(x.matrix(0, 0) == doctest::Approx(2.5 * g).epsilon(1e-9));
  }
}

TEST_CASE("box perturbation matches dense assembly") {
  const TruncatedH0 h0 = build_truncated_h0(mathieu(), 4, 1.0 / 16, 1);
  const Eigen::VectorXd w = h0.sample(unit_box());
  const double lambda = 0.5 * (h0.lower_edge + h0.upper_edge);
  const BSOperator x = assemble_bs(h0, w, lambda);
  const Eigen::MatrixXd r = dense_resolvent(h0, lambda);
  const auto k = static_cast<Eigen::Index>(x.support.size());
  Eigen::MatrixXd ref(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      ref(i, j) = std::sqrt(w[x.support[i]]) * r(x.support[i], x.support[j]) * std::sqrt(w[x.support[j]]);
  CHECK((x.matrix - ref).norm() <= 1e-10 * ref.norm());
  CHECK(x.definite);
  CHECK(x.symmetry_defect <= 1e-10);
}

TEST_CASE("zero perturbation gives an empty operator") {
  const TruncatedH0 h0 = build_truncated_h0(PotentialSpec::zero(1), 4, 1.0 / 16);
  const BSOperator x = assemble_bs(h0, Eigen::VectorXd::Zero(h0.size()), -0.5);
  CHECK(x.support.empty());
  CHECK(x.matrix.size() == 0);
}

TEST_CASE("lambda outside the gap is rejected") {
  const TruncatedH0 h0 = build_truncated_h0(PotentialSpec::zero(1), 4, 1.0 / 16);
  CHECK_THROWS_AS(assemble_bs(h0, h0.sample(unit_box()), 0.5), InvalidArgument);
}

TEST_CASE("edge grid spacing") {
  const auto g = edge_lambda_grid(1.0, EdgeSide::upper, 2.0);
  REQUIRE(g.size() == 21);
  CHECK(g.front() == 0.5);
  CHECK(g.back() == 1.0 - 0.5 * std::ldexp(1.0, -20));
  const auto l = edge_lambda_grid(0.0, EdgeSide::lower, 1.0, 3);
  CHECK(l == std::vector<double>{0.0625, 0.125, 0.25});
}

TEST_CASE("branches of the free d=1 box") {
  const TruncatedH0 h0 = build_truncated_h0(PotentialSpec::zero(1), 60, 1.0 / 64);
  const BranchTable t = characteristic_branches(h0, h0.sample(unit_box()), edge_lambda_grid(0.0, EdgeSide::upper, 1.0));
  CHECK(t.worst_monotonicity_violation() <= 1e-9);
  CHECK(t.domain_start(0) == 0);
  CHECK(t.max_negative_magnitude() == 0.0);
  // mu_1 ~ c / sqrt(edge - lambda) over one decade away from the box-size cutoff
  const BranchFit f = fit_branch_divergence(t, h0.upper_edge, 0, 1e-3, 1e-2, false);
  CHECK(f.points >= 3);
  CHECK(std::abs(f.slope + 0.5) <= 0.025);
}

TEST_CASE("pencil inverts a branch sample") {
  const TruncatedH0 h0 = build_truncated_h0(mathieu(), 8, 1.0 / 32, 1);
  const Eigen::VectorXd w = h0.sample(unit_box());
  const BranchTable t = characteristic_branches(h0, w, edge_lambda_grid(h0.upper_edge, EdgeSide::upper, h0.gap_width()));
  const std::size_t i = 10;
  const double gamma = -1.0 / t.mu_plus(0, i);
  const PencilSolution s = solve_pencil(h0, w, t, gamma);
  REQUIRE_FALSE(s.roots.empty());
  CHECK(std::abs(s.roots.back() - t.lambdas[i]) <= 1e-10);
  CHECK(s.ranks.back() == 0);
}

TEST_CASE("pencil roots equal direct eigenvalues") {
  const TruncatedH0 h0 = build_truncated_h0(mathieu(), 40, 1.0 / 64, 1);
  const Eigen::VectorXd w = h0.sample(unit_box());
  const BranchTable t = characteristic_branches(h0, w, edge_lambda_grid(h0.upper_edge, EdgeSide::upper, h0.gap_width()));
  for (double gamma : {-0.3, -2.0, 1.5}) {
    const PencilSolution s = solve_pencil(h0, w, t, gamma);
    const OracleResult o = gap_spectrum(h0, w, gamma, h0.lower_edge + 1e-9, h0.upper_edge - 1e-12);
    REQUIRE(static_cast<Eigen::Index>(s.roots.size()) == o.eigenvalues.size());
    CHECK(static_cast<int>(s.roots.size()) == s.expected);
    for (std::size_t k = 0; k < s.roots.size(); ++k) {
      CHECK(std::abs(s.roots[k] - o.eigenvalues[static_cast<Eigen::Index>(k)]) <= 1e-8);
      CHECK(pencil_kernel_dimension(h0, w, s.roots[k], gamma) == 1);
    }
  }
}

TEST_CASE("indefinite splitting") {
  const TruncatedH0 h0 = build_truncated_h0(mathieu(), 8, 1.0 / 32, 1);
  const double lambda = h0.upper_edge - 0.1;
  const Eigen::VectorXd wp = h0.sample(unit_box());
  const IndefiniteSplit pos = indefinite_split(h0, wp, lambda);
  CHECK(pos.x_minus.norm() == 0.0);
  CHECK(pos.residual <= 1e-10);

  const Eigen::VectorXd ws = h0.sample(PerturbationSpec::box(1, {-1.0, 0, 0}, {0.5, 0.5, 0.5})) -
                             h0.sample(PerturbationSpec::box(1, {1.0, 0, 0}, {0.4, 0.5, 0.5}));
  const IndefiniteSplit s = indefinite_split(h0, ws, lambda);
  CHECK(s.residual <= 1e-8);
  CHECK(s.x_plus.norm() > 0.0);
  CHECK(s.x_minus.norm() > 0.0);
  const IndefiniteSplit flipped = indefinite_split(h0, -ws, lambda);
  CHECK((flipped.x_plus - s.x_minus).norm() == 0.0);
  CHECK((flipped.x_minus - s.x_plus).norm() == 0.0);
  CHECK_THROWS_AS(characteristic_branches(h0, ws, {lambda}), InvalidArgument);
}

TEST_CASE("signed perturbation gives simple near-edge eigenvalues in d=1") {
  const TruncatedH0 h0 = build_truncated_h0(mathieu(), 40, 1.0 / 32, 1);
  const Eigen::VectorXd ws = h0.sample(PerturbationSpec::box(1, {-1.0, 0, 0}, {0.5, 0.5, 0.5})) -
                             0.5 * h0.sample(PerturbationSpec::box(1, {1.0, 0, 0}, {0.5, 0.5, 0.5}));
  const double lo = h0.upper_edge - 0.1 * h0.gap_width();
  const MultiplicityReport r = multiplicity_bound_check(h0, ws, {-0.1, -0.05}, lo, h0.upper_edge - 1e-12, 1);
  CHECK(r.within_bound);
  for (const auto& lv : r.levels) CHECK_FALSE(lv.empty());
}
