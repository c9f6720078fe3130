#include "vbl/green.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <cmath>
#include <numbers>

#include "vbl/errors.hpp"
#include "vbl/quadrature.hpp"

namespace vbl {

namespace {

constexpr double kPi = std::numbers::pi;

void check_args(int d, double gamma0) {
  if (d < 1 || d > 3) throw InvalidArgument("fundamental solutions are implemented for d = 1, 2, 3 only");
  if (!(gamma0 > 0)) throw InvalidArgument("gamma0 must be positive");
}

// Bernoulli polynomial B_k(y), k <= 8.
double bernoulli_poly(int k, double y) {
  static const double bn[9] = {1.0, -0.5, 1.0 / 6, 0.0, -1.0 / 30, 0.0, 1.0 / 42, 0.0, -1.0 / 30};
  double s = 0.0, binom = 1.0;
  for (int j = 0; j <= k; ++j) {
    s += binom * bn[j] * std::pow(y, k - j);
    binom = binom * (k - j) / (j + 1);
  }
  return s;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

double macdonald_k0(double z) {
  if (!(z > 0)) throw InvalidArgument("K0 needs a positive argument");
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [z](double u) { return std::exp(-z * std::cosh(u)); };
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
}

double fundamental_solution(int d, double gamma0, double r) {
  check_args(d, gamma0);
  r = std::abs(r);
  if (d == 1) return std::exp(-gamma0 * r) / (2.0 * gamma0);
  if (!(r > 0)) throw InvalidArgument("fundamental solution is singular at the origin for d >= 2");
  if (d == 3) return std::exp(-gamma0 * r) / (4.0 * kPi * r);
  return macdonald_k0(gamma0 * r) / (2.0 * kPi);
}

double fundamental_solution_quadrature(int d, double gamma0, double r) {
  check_args(d, gamma0);
  r = std::abs(r);
  if (d == 1) {
    // E_1(x) = (1/pi) int_0^inf cos(k x) / (k^2 + gamma0^2) dk
    if (r == 0.0) return 1.0 / (2.0 * gamma0);
    boost::math::quadrature::ooura_fourier_cos<double> integrator(1e-13);
    auto f = [gamma0](double k) { return 1.0 / (k * k + gamma0 * gamma0); };
    return integrator.integrate(f, r).first / kPi;
  }
  if (!(r > 0)) throw InvalidArgument("fundamental solution is singular at the origin for d >= 2");
  // E_d(r) = s_{d-2} / (2 (2 pi)^(d-1)) int_0^inf rho^(d-2) exp(-t r) / t d rho,  t = sqrt(rho^2 + gamma0^2)
  const double sphere = d == 2 ? 2.0 : 2.0 * kPi;
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [=](double rho) {
    const double t = std::hypot(rho, gamma0);
    return std::pow(rho, d - 2) * std::exp(-t * r) / t;
  };
  const double integral = integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
  return sphere / (2.0 * std::pow(2.0 * kPi, d - 1)) * integral;
}

double scaling_residual(int d, double gamma0, double r) {
  return std::abs(fundamental_solution(d, gamma0, r) -
                  std::pow(gamma0, d - 2) * fundamental_solution(d, 1.0, gamma0 * r));
}

double fourier_transform_e1(double gamma0, double k, double half_length) {
  const int panels = std::max(16, static_cast<int>(std::ceil(half_length * std::max(1.0, std::abs(k)))));
  std::vector<double> breaks(panels + 1);
  for (int i = 0; i <= panels; ++i) breaks[i] = half_length * i / panels;
  const Rule1d rule = composite_gauss_legendre(breaks, 12);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i)
    s += rule.weights[i] * std::cos(k * rule.nodes[i]) * fundamental_solution(1, gamma0, rule.nodes[i]);
  return 2.0 * s / std::sqrt(2.0 * kPi);
}

LatticeSum lattice_green(int d, double gamma0, const CPoint& p, const Point& y, double tail_tol, int max_radius) {
  check_args(d, gamma0);
  double kappa = 0.0;  // growth rate of |exp(i p.m)|
  for (int j = 0; j < d; ++j) kappa += std::abs(p[j].imag());
  if (kappa >= gamma0) throw InvalidArgument("lattice sum needs sum_j |Im p_j| < gamma0");
  if (max_radius <= 0) max_radius = d == 1 ? 4000 : (d == 2 ? 400 : 80);
  double ynorm = 0.0;
  for (int j = 0; j < d; ++j) ynorm += y[j] * y[j];
  ynorm = std::sqrt(ynorm);

  // Shell n (|m|_inf = n) has at most 2d (2n+1)^(d-1) points, each at distance >= n - |y|.
  auto shell_bound = [&](int n) {
    const double dist = n - ynorm;
    if (dist <= 0) return std::numeric_limits<double>::infinity();
    const double count = 2.0 * d * std::pow(2.0 * n + 1.0, d - 1);
    return count * fundamental_solution(d, gamma0, dist) * std::exp(kappa * n);
  };
  auto tail = [&](int radius) {
    double s = 0.0;
    for (int n = radius + 1;; ++n) {
      const double t = shell_bound(n);
      s += t;
      if (!std::isfinite(t)) return t;
      if (t < 1e-3 * tail_tol && n > radius + 8) return s * 1.01;
    }
  };
  int radius = static_cast<int>(std::ceil(ynorm)) + 1;
  while (tail(radius) > tail_tol) {
    radius = std::max(radius + 1, static_cast<int>(radius * 1.25));
    if (radius > max_radius)
      throw NumericalError("lattice sum tail bound " + std::to_string(tail_tol) + " not reachable within radius " +
                           std::to_string(max_radius));
  }

  cplx sum = 0.0;
  const int w = 2 * radius + 1;
  const long total = d == 1 ? w : (d == 2 ? static_cast<long>(w) * w : static_cast<long>(w) * w * w);
  for (long i = 0; i < total; ++i) {
    long r = i;
    std::array<int, 3> m{0, 0, 0};
    for (int j = d - 1; j >= 0; --j) {
      m[j] = static_cast<int>(r % w) - radius;
      r /= w;
    }
    double dist2 = 0.0;
    cplx phase = 0.0;
    for (int j = 0; j < d; ++j) {
      dist2 += (y[j] - m[j]) * (y[j] - m[j]);
      phase += p[j] * static_cast<double>(m[j]);
    }
    if (d >= 2 && dist2 == 0.0) throw InvalidArgument("lattice Green sum is singular at lattice points for d >= 2");
    sum += fundamental_solution(d, gamma0, std::sqrt(dist2)) * std::exp(cplx(0, 1) * phase);
  }
  return {sum, radius, tail(radius)};
}

cplx lattice_green_1d_closed(double gamma0, cplx p, double y) {
  const double l = std::floor(y);
  const double y0 = y - l;
  const cplx i(0, 1);
  const cplx a = std::exp(-gamma0 * y0) / (1.0 - std::exp(-gamma0 - i * p));
  const cplx b = std::exp(gamma0 * y0) * std::exp(-gamma0 + i * p) / (1.0 - std::exp(-gamma0 + i * p));
  return std::exp(i * p * l) * (a + b) / (2.0 * gamma0);
}

cplx fiber_resolvent_kernel(int d, double gamma0, const Point& p, const Point& y, int cutoff) {
  check_args(d, gamma0);
  const cplx i(0, 1);
  const double twopi = 2.0 * kPi;
  const int w = 2 * cutoff + 1;
  const long total = d == 1 ? w : (d == 2 ? static_cast<long>(w) * w : static_cast<long>(w) * w * w);
  cplx sum = 0.0;
  for (long idx = 0; idx < total; ++idx) {
    long r = idx;
    double k2 = 0.0, phase = 0.0;
    for (int j = d - 1; j >= 0; --j) {
      const int m = static_cast<int>(r % w) - cutoff;
      r /= w;
      const double k = twopi * m + p[j];
      k2 += k * k;
      phase += twopi * m * y[j];
    }
    sum += std::polar(1.0, phase) / (k2 + gamma0 * gamma0);
  }
  if (d != 1) return sum;

  // 1/((2 pi m + p)^2 + g^2) = sum_n a_n u^(n+2), u = 1/(2 pi m), a_n = -2p a_{n-1} - q a_{n-2}.
  // sum_{m != 0} exp(2 pi i m y) u^k = -i^k B_k({y}) / k!; subtract the part already summed.
  const double q = p[0] * p[0] + gamma0 * gamma0;
  const double yf = y[0] - std::floor(y[0]);
  double a_prev = 0.0, a = 1.0;
  for (int n = 0; n <= 6; ++n) {
    const int k = n + 2;
    const cplx full = -std::pow(i, k) * bernoulli_poly(k, yf) / factorial(k);
    cplx partial = 0.0;
    for (int m = 1; m <= cutoff; ++m) {
      const double u = 1.0 / (twopi * m);
      const double uk = std::pow(u, k);
      partial += uk * (std::polar(1.0, twopi * m * y[0]) + std::pow(-1.0, k) * std::polar(1.0, -twopi * m * y[0]));
    }
    sum += a * (full - partial);
    const double next = -2.0 * p[0] * a - q * a_prev;
    a_prev = a;
    a = next;
  }
  return sum;
}

}  // namespace vbl
