#pragma once

#include <array>
#include <complex>

#include "vbl/lattice.hpp"

namespace vbl {

using CPoint = std::array<cplx, 3>;

/// MacDonald function K_0(z) = int_0^inf exp(-z cosh u) du by double-exponential quadrature.
double macdonald_k0(double z);

/// Decaying solution of (-Delta + gamma0^2) E = delta in R^d at distance r, d in {1,2,3}.
double fundamental_solution(int d, double gamma0, double r);

/// Same quantity from an independent integral representation (Fourier inversion for d=1,
/// transverse descent integral for d=2,3).
double fundamental_solution_quadrature(int d, double gamma0, double r);

/// |E_d(r, gamma0) - gamma0^(d-2) E_d(gamma0 r, 1)|.
double scaling_residual(int d, double gamma0, double r);

/// (2 pi)^(-1/2) int_{-L}^{L} E_1(x) exp(-i k x) dx by composite Gauss-Legendre.
double fourier_transform_e1(double gamma0, double k, double half_length);

struct LatticeSum {
  cplx value;
  int radius = 0;            // terms with |m|_inf <= radius were summed
  double tail_bound = 0.0;   // bound on the neglected terms
};

/// G0(y, p) = sum_m E_d(y - m) exp(i p.m) with |Im p| < gamma0, truncated once the tail bound drops
/// below tail_tol. Throws NumericalError when max_radius is not enough, InvalidArgument when y is a
/// lattice point in d >= 2 or Im p is outside the convergence strip.
LatticeSum lattice_green(int d, double gamma0, const CPoint& p, const Point& y, double tail_tol = 1e-10,
                         int max_radius = 0);

/// Two-sided geometric-series closed form of G0 in d=1.
cplx lattice_green_1d_closed(double gamma0, cplx p, double y);

/// sum_{|m|_inf <= cutoff} exp(2 pi i m.y) / (|2 pi m + p|^2 + gamma0^2), the free fiber resolvent kernel.
/// In d=1 the truncated tail is corrected with Bernoulli-polynomial sums.
cplx fiber_resolvent_kernel(int d, double gamma0, const Point& p, const Point& y, int cutoff);

}  // namespace vbl
