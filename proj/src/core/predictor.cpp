#include "vbl/predictor.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "vbl/errors.hpp"

namespace vbl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// W >= 0 pushes levels down for gamma < 0, so they can only leave the upper edge, and vice versa.
void check_pairing(const GapEdge& edge, double gamma) {
  if (gamma == 0.0) throw InvalidArgument("coupling must be nonzero");
  if (edge.side == EdgeSide::upper && gamma > 0)
    throw InvalidArgument("gamma > 0 with W >= 0 produces no levels at the upper edge; use the lower edge");
  if (edge.side == EdgeSide::lower && gamma < 0)
    throw InvalidArgument("gamma < 0 with W >= 0 produces no levels at the lower edge; use the upper edge");
}

void place(Prediction& pr, const GapEdge& edge) {
  const double sgn = edge.side == EdgeSide::upper ? -1.0 : 1.0;
  pr.rho.clear();
  for (double dpt : pr.depth) pr.rho.push_back(edge.value + sgn * dpt);
  if (pr.log_depth.size() != pr.depth.size()) {
    pr.log_depth.clear();
    for (double dpt : pr.depth) pr.log_depth.push_back(std::log(dpt));
  }
}

}  // namespace

const char* law_name(Law law) {
  switch (law) {
    case Law::d1_sqrt: return "d1_sqrt";
    case Law::d2_log: return "d2_log";
    case Law::degenerate_psi: return "degenerate_psi";
    case Law::threshold_none: return "threshold_none";
  }
  return "unknown";
}

int asymptotic_multiplicity(const GapEdge& edge) {
  if (edge.degenerate) {
    if (edge.codim == 1 || edge.codim == 2) return kInfiniteMultiplicity;
    if (edge.codim >= 3) return 0;
    throw InvalidArgument("degenerate edge without a codimension");
  }
  if (edge.extrema.empty()) throw InvalidArgument("edge has not been classified");
  if (edge.d == 1) return 1;
  if (edge.d == 2) return static_cast<int>(edge.extrema.size());
  return 0;
}

double psi(int d, int codim, double s) {
  if (codim == 1) return std::pow(2.0 * kPi, d) / (std::sqrt(2.0) * kPi) * std::sqrt(s);
  if (codim == 2) return std::pow(2.0 * kPi, d - 1) / std::log(1.0 / s);
  throw InvalidArgument("Psi is defined for codimension 1 and 2");
}

double law_function(Law law, int d, int codim, double depth, double calibration) {
  switch (law) {
    case Law::d1_sqrt: return std::sqrt(depth);
    case Law::d2_log: return 1.0 / std::log(1.0 / depth);
    case Law::degenerate_psi: return codim == 1 ? psi(d, 1, depth / calibration) : psi(d, 2, depth);
    case Law::threshold_none: break;
  }
  throw InvalidArgument("threshold_none has no law function");
}

Prediction predict_d1(const GapEdge& edge, const NonDegenerateEdgeModel& model, double gamma, double gap_width) {
  if (edge.d != 1) throw InvalidArgument("predict_d1 needs d = 1");
  check_pairing(edge, gamma);
  Prediction pr;
  pr.side = edge.side;
  pr.gamma = gamma;
  pr.law = Law::d1_sqrt;
  pr.multiplicity = 1;
  const double a = std::sqrt(model.masses[0]) * model.norms2[0] / std::sqrt(2.0);
  pr.constant = {a};
  pr.depth = {std::pow(std::abs(gamma) * a, 2)};
  pr.validity_radius = std::isfinite(gap_width) ? std::sqrt(0.5 * gap_width) / a : kInf;
  place(pr, edge);
  return pr;
}

Prediction predict_d2(const GapEdge& edge, const NonDegenerateEdgeModel& model, double gamma, double gap_width) {
  if (edge.d != 2) throw InvalidArgument("predict_d2 needs d = 2");
  check_pairing(edge, gamma);
  Prediction pr;
  pr.side = edge.side;
  pr.gamma = gamma;
  pr.law = Law::d2_log;
  pr.multiplicity = static_cast<int>(model.nu.size());
  for (Eigen::Index k = 0; k < model.nu.size(); ++k) {
    pr.constant.push_back(model.nu[k] / (2.0 * kPi));
    pr.log_depth.push_back(-2.0 * kPi / (std::abs(gamma) * model.nu[k]));
    pr.depth.push_back(std::exp(pr.log_depth.back()));
  }
  const double half = 0.5 * gap_width;
  pr.validity_radius = (std::isfinite(gap_width) && half < 1.0) ? 2.0 * kPi / (model.nu[0] * std::log(1.0 / half)) : kInf;
  place(pr, edge);
  return pr;
}

Prediction predict_degenerate(const GapEdge& edge, const DegenerateEdgeModel& model, double gamma, int n,
                              double gap_width) {
  check_pairing(edge, gamma);
  Prediction pr;
  pr.side = edge.side;
  pr.gamma = gamma;
  if (edge.codim >= 3 || !edge.degenerate) {
    pr.law = Law::threshold_none;
    pr.multiplicity = 0;
    return pr;
  }
  pr.law = Law::degenerate_psi;
  pr.multiplicity = kInfiniteMultiplicity;
  const int d = edge.d;
  const double g = std::abs(gamma);
  const int count = std::min<int>(n, static_cast<int>(model.nu.size()));
  for (int k = 0; k < count; ++k) {
    const double nu = model.nu[k];
    if (!(nu > 0)) break;
    pr.constant.push_back(nu);
    if (edge.codim == 1)
      pr.log_depth.push_back(std::log(model.calibration) +
                             2.0 * std::log(std::sqrt(2.0) * kPi * g * nu / std::pow(2.0 * kPi, d)));
    else
      pr.log_depth.push_back(-std::pow(2.0 * kPi, d - 1) / (g * nu));
    pr.depth.push_back(std::exp(pr.log_depth.back()));
  }
  const double half = 0.5 * gap_width;
  if (!std::isfinite(gap_width) || pr.constant.empty()) {
    pr.validity_radius = kInf;
  } else if (edge.codim == 1) {
    pr.validity_radius = std::sqrt(half / model.calibration) * std::pow(2.0 * kPi, d) / (std::sqrt(2.0) * kPi * model.nu[0]);
  } else {
    pr.validity_radius = half < 1.0 ? std::pow(2.0 * kPi, d - 1) / (model.nu[0] * std::log(1.0 / half)) : kInf;
  }
  place(pr, edge);
  return pr;
}

Prediction predict(const GapEdge& edge, const NonDegenerateEdgeModel* model, const DegenerateEdgeModel* deg,
                   double gamma, double gap_width, int n_degenerate) {
  if (edge.degenerate) {
    if (!deg) throw InvalidArgument("degenerate edge needs a Morse-Bott model");
    return predict_degenerate(edge, *deg, gamma, n_degenerate, gap_width);
  }
  if (edge.d >= 3) {
    check_pairing(edge, gamma);
    Prediction pr;
    pr.side = edge.side;
    pr.gamma = gamma;
    pr.law = Law::threshold_none;
    return pr;
  }
  if (!model) throw InvalidArgument("non-degenerate edge needs a Gram model");
  return edge.d == 1 ? predict_d1(edge, *model, gamma, gap_width) : predict_d2(edge, *model, gamma, gap_width);
}

double lieb_thirring_sum(const NonDegenerateEdgeModel& model, double gamma) {
  double s = 0.0;
  for (std::size_t k = 0; k < model.masses.size(); ++k) s += std::sqrt(model.masses[k]) * model.norms2[k];
  return std::abs(gamma) * s / (2.0 * kPi);
}

double lieb_thirring_degenerate(const DegenerateEdgeModel& model, double gamma) {
  return std::abs(gamma) * model.trace_diagonal;
}

const std::vector<cplx>& limiting_eigenfunction(const NonDegenerateEdgeModel& model, int k) {
  if (k < 0 || k >= static_cast<int>(model.g.size())) throw InvalidArgument("eigenfunction index out of range");
  return model.g[k];
}

ThresholdVerdict threshold_verdict(const GapEdge& edge, const PerturbationSpec& W) {
  ThresholdVerdict v;
  const int m = asymptotic_multiplicity(edge);
  const bool decays = W.integrals().decay_conditions;
  if (!decays) {
    v.reason = "decay conditions on W not established";
    return v;
  }
  if (!W.definite()) {
    // Only W+ (upper edge) or W- (lower edge) can generate levels; its count bounds the multiplicity.
    v.multiplicity_bound = m;
    v.no_virtuals_for_small_gamma = (m == 0);
    v.reason = m == 0 ? "no branch diverges at this edge" : "indefinite W: multiplicity bounded by the W+ count";
    return v;
  }
  v.multiplicity_bound = m;
  if (m == 0) {
    v.no_virtuals_for_small_gamma = true;
    v.reason = edge.degenerate ? "extremal manifold of codimension >= 3" : "point extrema in d >= 3";
  } else {
    v.has_virtuals = true;
    v.reason = m == kInfiniteMultiplicity ? "extremal manifold of codimension 1 or 2" : "point extrema in d <= 2";
  }
  return v;
}

}  // namespace vbl
