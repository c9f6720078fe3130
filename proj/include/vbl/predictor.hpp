#pragma once

#include <string>
#include <vector>

#include "vbl/bands.hpp"
#include "vbl/edge_model.hpp"

namespace vbl {

enum class Law { d1_sqrt, d2_log, degenerate_psi, threshold_none };

const char* law_name(Law law);

/// Sentinel for an infinite asymptotic multiplicity.
constexpr int kInfiniteMultiplicity = -1;

/// Number of eigenvalue branches born at the edge: 1 (d=1), number of extrema (d=2), 0 (d>=3 point
/// extrema or codim >= 3), infinite (codim 1 or 2 manifolds).
int asymptotic_multiplicity(const GapEdge& edge);

struct Prediction {
  EdgeSide side = EdgeSide::upper;
  double gamma = 0.0;
  Law law = Law::threshold_none;
  int multiplicity = 0;
  std::vector<double> rho;      // leading-order eigenvalues, deepest first
  std::vector<double> depth;    // |edge - rho|
  std::vector<double> log_depth; // ln(depth), finite even where depth underflows
  std::vector<double> constant; // A_k in f(depth_k) = |gamma| A_k
  double validity_radius = 0.0; // |gamma| where the deepest predicted depth reaches half the gap width
};

/// f(depth) for each law, so that f(depth_k(gamma)) = |gamma| A_k at leading order.
/// degenerate: Psi(s) = (2 pi)^d / (sqrt(2) pi) sqrt(s / calibration) (codim 1), (2 pi)^(d-1) / ln(1/s) (codim 2).
double law_function(Law law, int d, int codim, double depth, double calibration = 1.0);

/// Unperturbed Psi of the degenerate law.
double psi(int d, int codim, double s);

/// sqrt(edge - rho) = |gamma| sqrt(m) ||v||^2 / sqrt(2). gap_width may be infinite.
Prediction predict_d1(const GapEdge& edge, const NonDegenerateEdgeModel& model, double gamma, double gap_width);

/// edge - rho_k = exp(-2 pi / (|gamma| nu_k)), one level per nu_k.
Prediction predict_d2(const GapEdge& edge, const NonDegenerateEdgeModel& model, double gamma, double gap_width);

/// Inverts Psi(depth) = |gamma| nu_n for the first n levels; codim >= 3 returns threshold_none.
Prediction predict_degenerate(const GapEdge& edge, const DegenerateEdgeModel& model, double gamma, int n,
                              double gap_width);

/// Dispatches on dimension and degeneracy.
Prediction predict(const GapEdge& edge, const NonDegenerateEdgeModel* model, const DegenerateEdgeModel* deg,
                   double gamma, double gap_width, int n_degenerate = 8);

/// (|gamma| / 2 pi) sum_k sqrt(m_k) ||v_k||^2.
double lieb_thirring_sum(const NonDegenerateEdgeModel& model, double gamma);

/// |gamma| tr(G_W) for the Morse-Bott model.
double lieb_thirring_degenerate(const DegenerateEdgeModel& model, double gamma);

/// Limit of sqrt(W) psi / ||sqrt(W) psi||: the k-th eigenfunction of G_W at the quadrature nodes.
const std::vector<cplx>& limiting_eigenfunction(const NonDegenerateEdgeModel& model, int k);

struct ThresholdVerdict {
  bool has_virtuals = false;
  bool no_virtuals_for_small_gamma = false;
  int multiplicity_bound = 0;  // kInfiniteMultiplicity when unbounded
  std::string reason;
};

ThresholdVerdict threshold_verdict(const GapEdge& edge, const PerturbationSpec& W);

}  // namespace vbl
