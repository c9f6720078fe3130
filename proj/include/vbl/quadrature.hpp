#pragma once

#include <vector>

namespace vbl {

/// One-dimensional quadrature rule: nodes and positive weights.
struct Rule1d {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule with n nodes on [a, b].
Rule1d gauss_legendre(int n, double a = -1.0, double b = 1.0);

/// Composite Gauss-Legendre rule over consecutive panels [breaks[i], breaks[i+1]].
/// Breakpoints must be strictly increasing.
Rule1d composite_gauss_legendre(const std::vector<double>& breaks, int order);

/// Sorted, deduplicated breakpoints of [a, b] containing every entry of `forced`
/// that falls inside, with no panel longer than max_panel.
std::vector<double> panel_breaks(double a, double b, std::vector<double> forced, double max_panel);

}  // namespace vbl
