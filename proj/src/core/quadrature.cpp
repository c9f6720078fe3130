#include "vbl/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vbl/errors.hpp"

namespace vbl {

Rule1d gauss_legendre(int n, double a, double b) {
  if (n < 1) throw InvalidArgument("gauss_legendre: order must be positive");
  Rule1d rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton iteration on P_n starting from the Chebyshev-like guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = x;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  if (n == 1) {
    rule.nodes[0] = mid;
    rule.weights[0] = b - a;
  }
  return rule;
}

Rule1d composite_gauss_legendre(const std::vector<double>& breaks, int order) {
  Rule1d out;
  const Rule1d ref = gauss_legendre(order);
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p], b = breaks[p + 1];
    if (!(b > a)) throw InvalidArgument("composite_gauss_legendre: breakpoints must increase");
    for (int i = 0; i < order; ++i) {
      out.nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * ref.nodes[i]);
      out.weights.push_back(0.5 * (b - a) * ref.weights[i]);
    }
  }
  return out;
}

std::vector<double> panel_breaks(double a, double b, std::vector<double> forced, double max_panel) {
  std::vector<double> pts{a, b};
  for (double f : forced)
    if (f > a && f < b) pts.push_back(f);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(), [](double x, double y) { return std::abs(x - y) < 1e-13; }),
            pts.end());
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const int pieces = std::max(1, static_cast<int>(std::ceil((pts[i + 1] - pts[i]) / max_panel - 1e-12)));
    for (int k = 0; k < pieces; ++k) out.push_back(pts[i] + (pts[i + 1] - pts[i]) * k / pieces);
  }
  out.push_back(pts.back());
  return out;
}

}  // namespace vbl
