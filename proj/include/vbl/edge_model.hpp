#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vbl/bands.hpp"
#include "vbl/lattice.hpp"

namespace vbl {

/// Tensor quadrature over the region carrying the mass of |W|.
struct SpatialQuadrature {
  int d = 1;
  std::vector<Point> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Composite Gauss-Legendre panels (order 8, length <= 1/2) with breaks at every box face and
/// integer point; box_scale > 1 enlarges the covered box about its centre.
SpatialQuadrature perturbation_quadrature(const PerturbationSpec& W, double box_scale = 1.0);

/// v(x) = sqrt(W(x)) b(x) at the quadrature nodes.
struct WeightedBloch {
  std::vector<cplx> values;
  double norm2 = 0.0;
  int extremum = 0;
};

/// Throws InvalidArgument for indefinite W or when the extremum carries no Bloch function.
WeightedBloch weighted_bloch(const GapEdge& edge, int k, const PerturbationSpec& W, const SpatialQuadrature& quad);

struct NonDegenerateEdgeModel {
  Eigen::MatrixXcd gram;             // A_kl = (m_k m_l)^(1/4) (v_l, v_k)
  Eigen::VectorXd nu;                // descending
  Eigen::MatrixXcd gram_vectors;     // columns match nu
  std::vector<std::vector<cplx>> g;  // unit eigenfunctions of G_W at the quadrature nodes
  std::vector<double> masses;
  std::vector<double> norms2;
  double condition_number = 0.0;
};

/// Throws NumericalError when the Gram matrix is not numerically positive definite.
NonDegenerateEdgeModel gram_and_nu(const GapEdge& edge, const std::vector<WeightedBloch>& vs,
                                   const SpatialQuadrature& quad);

/// Weighted Bloch functions for every extremum followed by gram_and_nu.
NonDegenerateEdgeModel build_edge_model(const GapEdge& edge, const PerturbationSpec& W,
                                        const SpatialQuadrature& quad);

/// Relative change of ||v_k||^2 when the quadrature box is doubled.
double box_doubling_error(const GapEdge& edge, const PerturbationSpec& W);

struct DegenerateEdgeModel {
  int d = 2;
  int codim = 1;
  std::vector<Point> points;        // spatial grid restricted to W > w_floor
  double cell = 0.0;                // spatial grid step
  Eigen::VectorXd nu;               // descending
  std::vector<std::vector<cplx>> g;  // leading unit eigenfunctions at the grid points
  double trace_diagonal = 0.0;      // int G_W(s,s) ds
  double trace_sum = 0.0;           // sum of all computed nu
  double calibration = 1.0;         // multiplies the codim-1 depth law
  int n_samples = 0;
};

struct DegenerateOptions {
  double w_floor = 1e-14;
  double spacing = 0.25;
  int n_functions = 8;        // eigenfunctions kept
  double refine_tol = 1e-4;   // max relative change of nu_1 under sample doubling
};

/// Kernel G_W(x,s) = sum_i w_i sqrt(m_i) sqrt(W(x)) exp(i k_i.(x-s)) sqrt(W(s)) over manifold samples.
/// Also evaluates the model with twice the samples; throws NumericalError when nu_1 moves by more than
/// refine_tol relative.
DegenerateEdgeModel degenerate_gw(const SyntheticDispersion& sd, const PerturbationSpec& W, int n_samples,
                                  const DegenerateOptions& opt = {});

}  // namespace vbl
