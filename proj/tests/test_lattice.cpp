#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "vbl/errors.hpp"
#include "vbl/lattice.hpp"
#include "vbl/quadrature.hpp"

using namespace vbl;

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  const Rule1d r = gauss_legendre(6, 0.0, 2.0);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], 11);
  CHECK(s == doctest::Approx(std::pow(2.0, 12) / 12.0).epsilon(1e-13));
  const Rule1d c = composite_gauss_legendre(panel_breaks(-1.0, 3.0, {0.5}, 0.7), 5);
  double e = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) e += c.weights[i] * std::exp(c.nodes[i]);
  CHECK(e == doctest::Approx(std::exp(3.0) - std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("potential evaluation") {
  const auto zero = PotentialSpec::zero(1);
  CHECK(zero.evaluate({0.3, 0, 0}) == 0.0);
  const auto cosv = PotentialSpec::fourier(1, {{{1, 0, 0}, 0.5}, {{-1, 0, 0}, 0.5}});
  CHECK(cosv.evaluate({0.0, 0, 0}) == doctest::Approx(1.0));
  CHECK(std::abs(cosv.evaluate({0.25, 0, 0})) < 1e-15);
  CHECK_THROWS_AS(PotentialSpec::fourier(1, {{{1, 0, 0}, 0.5}}), InvalidArgument);

  const auto v2 = PotentialSpec::cosine_sum(2, {{{1, 0, 0}, 1.0}, {{1, 1, 0}, 0.3}, {{0, 2, 0}, -0.7}});
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 100; ++i) {
    const Point x{u(rng), u(rng), 0.0};
    const double direct = std::cos(2 * std::numbers::pi * x[0]) +
                          0.3 * std::cos(2 * std::numbers::pi * (x[0] + x[1])) -
                          0.7 * std::cos(4 * std::numbers::pi * x[1]);
    CHECK(v2.evaluate(x) == doctest::Approx(direct).epsilon(1e-13));
    CHECK(std::abs(v2.evaluate(x) - v2.evaluate({x[0] + 1.0, x[1], 0.0})) < 1e-12);
    CHECK(std::abs(v2.evaluate(x) - v2.evaluate({x[0], x[1] - 1.0, 0.0})) < 1e-12);
  }
}

TEST_CASE("perturbation catalog") {
  const auto box = PerturbationSpec::box(1, {0, 0, 0}, {0.5, 0.5, 0.5});
  CHECK(box.evaluate({0, 0, 0}) == 1.0);
  CHECK(box.evaluate({2, 0, 0}) == 0.0);
  CHECK(box.integrals().integral == doctest::Approx(1.0));

  const auto g = PerturbationSpec::gaussian(2, {0.2, -0.1, 0}, 1.0, 1.7);
  CHECK(g.evaluate({0.2, -0.1, 0}) == doctest::Approx(1.7));
  CHECK(PerturbationSpec::gaussian(2, {}, 1.0).integrals().integral == doctest::Approx(2 * std::numbers::pi));

  const PerturbationSpec signed_boxes(1, "signed_sum",
                                      {Bump{BumpShape::box, {-1, 0, 0}, {0.5, 0.5, 0.5}, 1.0},
                                       Bump{BumpShape::box, {1, 0, 0}, {0.25, 0.5, 0.5}, -1.0}});
  const auto si = signed_boxes.integrals();
  CHECK(si.integral == doctest::Approx(0.5));
  CHECK(si.abs_integral == doctest::Approx(1.5));
  CHECK(si.abs_integral_exact);
  CHECK_FALSE(signed_boxes.definite());
  CHECK(signed_boxes.positive_part({-1, 0, 0}) == 1.0);
  CHECK(signed_boxes.negative_part({1, 0, 0}) == 1.0);
  CHECK_THROWS_AS(PerturbationSpec(1, "sum", {Bump{BumpShape::box, {}, {1, 1, 1}, -1.0}}), InvalidArgument);

  const PerturbationSpec overlapping(1, "signed_sum",
                                     {Bump{BumpShape::gaussian, {}, {1, 1, 1}, 1.0},
                                      Bump{BumpShape::gaussian, {}, {0.5, 1, 1}, -1.0}});
  const auto oi = overlapping.integrals();
  CHECK_FALSE(oi.abs_integral_exact);
  // W = g1 - g2 >= 0 everywhere since exp(-x^2/2) >= exp(-2x^2)
  CHECK(oi.abs_integral == doctest::Approx(oi.integral).epsilon(1e-8));
}

TEST_CASE("definite perturbation is nonnegative at random points") {
  const PerturbationSpec w(3, "sum",
                           {Bump{BumpShape::gaussian, {0.1, 0, 0}, {0.7, 1.0, 1.3}, 0.4},
                            Bump{BumpShape::box, {0, 0.5, 0}, {0.5, 0.2, 0.4}, 2.0}});
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 10000; ++i) CHECK(w.evaluate({u(rng), u(rng), u(rng)}) >= 0.0);
}

TEST_CASE("closed-form integrals match trapezoid quadrature") {
  for (int d = 1; d <= 2; ++d) {
    const PerturbationSpec w(d, "sum",
                             {Bump{BumpShape::gaussian, {0.3, -0.2, 0}, {0.8, 1.1, 1}, 1.3},
                              Bump{BumpShape::box, {-0.5, 0.25, 0}, {0.5, 0.75, 1}, 0.6}});
    Point lo{}, hi{};
    w.support_box(lo, hi);
    // box faces at multiples of 1/4 fall on the grid so the half-value convention makes this exact
    const double h = 1.0 / 64;
    std::array<int, 3> n{1, 1, 1};
    for (int j = 0; j < d; ++j) {
      lo[j] = std::floor(lo[j]);
      hi[j] = std::ceil(hi[j]);
      n[j] = static_cast<int>(std::lround((hi[j] - lo[j]) / h));
    }
    double s = 0.0;
    for (int a = 0; a <= n[0]; ++a)
      for (int b = 0; b <= (d > 1 ? n[1] : 0); ++b) {
        const double wa = (a == 0 || a == n[0]) ? 0.5 : 1.0;
        const double wb = d == 1 ? 1.0 : ((b == 0 || b == n[1]) ? 0.5 : 1.0);
        s += wa * wb * w.evaluate({lo[0] + a * h, lo[1] + b * h, 0.0});
      }
    s *= std::pow(h, d);
    CHECK(std::abs(s - w.integrals().integral) / w.integrals().integral < 1e-6);
  }
}

TEST_CASE("momentum grid") {
  const MomentumGrid g(2, {4, 6, 1});
  CHECK(g.size() == 24);
  bool has_zero = false, has_pi = false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point p = g.point(i);
    if (std::abs(p[0]) < 1e-15 && std::abs(p[1]) < 1e-15) has_zero = true;
    if (std::abs(p[0] + std::numbers::pi) < 1e-15 && std::abs(p[1] + std::numbers::pi) < 1e-15) has_pi = true;
    CHECK(g.flat_index(g.multi_index(i)) == i);
  }
  CHECK(has_zero);
  CHECK(has_pi);
}
