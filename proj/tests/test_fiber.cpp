#include <cmath>
#include <numbers>

#include "doctest.h"
#include "vbl/errors.hpp"
#include "vbl/fiber.hpp"

using namespace vbl;

namespace {
const double pi = std::numbers::pi;
PotentialSpec mathieu(double a) { return PotentialSpec::cosine_sum(1, {{{1, 0, 0}, a}}); }
}  // namespace

TEST_CASE("fiber matrix entries") {
  const PlaneWaveBasis b(1, 1);
  const auto h0 = assemble_fiber({0, 0, 0}, PotentialSpec::zero(1), b);
  CHECK(h0(0, 0).real() == doctest::Approx(4 * pi * pi));
  CHECK(h0(1, 1).real() == 0.0);
  CHECK(h0(2, 2).real() == doctest::Approx(4 * pi * pi));
  const auto hpi = assemble_fiber({pi, 0, 0}, PotentialSpec::zero(1), b);
  CHECK(hpi(0, 0).real() == doctest::Approx(pi * pi));
  CHECK(hpi(1, 1).real() == doctest::Approx(pi * pi));
  CHECK(hpi(2, 2).real() == doctest::Approx(9 * pi * pi));
  const auto hv = assemble_fiber({0, 0, 0}, mathieu(2.0), b);
  CHECK(hv(0, 1) == cplx(1.0));
  CHECK(hv(1, 2) == cplx(1.0));
  CHECK(hv(0, 2) == cplx(0.0));
  CHECK((hv - hv.adjoint()).norm() < 1e-14);
  CHECK_THROWS_AS(assemble_fiber({}, PotentialSpec::cosine_sum(1, {{{2, 0, 0}, 1.0}}), b), InvalidArgument);
}

TEST_CASE("free fiber spectra") {
  const PlaneWaveBasis b(1, 16);
  const auto s0 = fiber_spectrum({0, 0, 0}, PotentialSpec::zero(1), b, 3);
  CHECK(std::abs(s0.eigenvalues[0]) < 1e-12);
  CHECK(s0.eigenvalues[1] == doctest::Approx(4 * pi * pi));
  CHECK(s0.eigenvalues[2] == doctest::Approx(4 * pi * pi));
  const auto spi = fiber_spectrum({pi, 0, 0}, PotentialSpec::zero(1), b, 2);
  CHECK(spi.eigenvalues[0] == doctest::Approx(pi * pi));
  CHECK(spi.eigenvalues[1] == doctest::Approx(pi * pi));
  const Eigen::MatrixXcd gram = s0.eigenvectors.adjoint() * s0.eigenvectors;
  CHECK((gram - Eigen::MatrixXcd::Identity(3, 3)).norm() < 1e-10);
}

TEST_CASE("Mathieu gap at the zone boundary") {
  const auto s16 = fiber_spectrum({pi, 0, 0}, mathieu(1.0), PlaneWaveBasis(1, 16), 2);
  const auto s32 = fiber_spectrum({pi, 0, 0}, mathieu(1.0), PlaneWaveBasis(1, 32), 2);
  CHECK((s16.eigenvalues - s32.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);
  const double gap = s32.eigenvalues[1] - s32.eigenvalues[0];
  CHECK(std::abs(gap - 1.0) < 0.1);
}

TEST_CASE("Bloch functions") {
  const CellGrid g{1, 64};
  const PlaneWaveBasis b(1, 16);
  const auto s0 = fiber_spectrum({0, 0, 0}, PotentialSpec::zero(1), b, 1);
  const BlochFunction b0(s0, b, 0, g);
  for (const cplx& v : b0.values()) CHECK(std::abs(v - 1.0) < 1e-12);

  const double p = 0.3;
  const auto sp = fiber_spectrum({p, 0, 0}, PotentialSpec::zero(1), b, 1);
  const BlochFunction bp(sp, b, 0, g);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(std::abs(bp.values()[i]) - 1.0) < 1e-12);
  // quasi-periodic extension
  CHECK(std::abs(bp.evaluate({2.2, 0, 0}) - std::polar(1.0, 2 * p) * bp.evaluate({0.2, 0, 0})) < 1e-12);
  CHECK(std::abs(bp.evaluate({2.2, 0, 0}) / bp.evaluate({0.0, 0, 0}) - std::polar(1.0, 2.2 * p)) < 1e-12);

  const auto sm = fiber_spectrum({pi, 0, 0}, mathieu(1.0), b, 1);
  const BlochFunction bm(sm, b, 0, g);
  double norm2 = 0.0;
  for (const cplx& v : bm.values()) norm2 += std::norm(v) / g.n;
  CHECK(std::abs(norm2 - 1.0) < 1e-8);
  for (int i = 1; i < g.n; ++i)
    CHECK(std::abs(std::abs(bm.values()[i]) - std::abs(bm.values()[g.n - i])) < 1e-8);
}

TEST_CASE("time reversal and cutoff convergence") {
  CHECK(time_reversal_check(PotentialSpec::zero(1), PlaneWaveBasis(1, 16), MomentumGrid(1, 64), 4) == 0.0);
  CHECK(time_reversal_check(mathieu(1.0), PlaneWaveBasis(1, 16), MomentumGrid(1, 64), 4) <= 1e-10);
  const auto v2 = PotentialSpec::cosine_sum(2, {{{1, 0, 0}, 1.0}, {{1, 1, 0}, 0.5}, {{0, 1, 0}, -0.4}});
  CHECK(time_reversal_check(v2, PlaneWaveBasis(2, 6), MomentumGrid(2, 8), 4) <= 1e-10);
  const auto rep = check_cutoff_convergence(mathieu(1.0), 16, 3, {{0, 0, 0}, {pi, 0, 0}, {1.0, 0, 0}});
  CHECK(rep.converged);
  CHECK(rep.deviation <= 1e-8);
}

TEST_CASE("enlarging the basis never raises eigenvalues") {
  const auto v2 = PotentialSpec::cosine_sum(2, {{{1, 0, 0}, 1.0}, {{1, 1, 0}, 0.5}});
  for (int n = 1; n < 5; ++n) {
    const auto a = fiber_spectrum({0.4, -1.1, 0}, v2, PlaneWaveBasis(2, n), 5, false);
    const auto c = fiber_spectrum({0.4, -1.1, 0}, v2, PlaneWaveBasis(2, n + 1), 5, false);
    CHECK((c.eigenvalues - a.eigenvalues).maxCoeff() <= 1e-12);
  }
}
