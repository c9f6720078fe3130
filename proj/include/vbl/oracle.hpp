#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vbl/discrete_h0.hpp"
#include "vbl/edge_model.hpp"
#include "vbl/predictor.hpp"

namespace vbl {

/// Tolerance for grouping eigenvalues into one multiple eigenvalue.
constexpr double kClusterTol = 1e-9;

struct OracleResult {
  double gamma = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  Eigen::VectorXd eigenvalues;  // ascending, one entry per eigenvector of the discrete operator
  Eigen::MatrixXd vectors;      // unit l2 coordinates, columns match eigenvalues
  Eigen::VectorXd residuals;    // ||H psi - lambda psi||
  std::vector<double> levels;   // distinct eigenvalues (clusters)
  std::vector<int> multiplicities;  // cluster size times the angular multiplicity
  std::vector<std::string> warnings;
  // discretization metadata
  H0Geometry geometry = H0Geometry::periodic_box;
  int d = 1;
  double h = 0.0;
  double L = 0.0;
  int channel = 0;
  int size = 0;
};

/// H0 + gamma diag(w).
SpMat perturbed_matrix(const TruncatedH0& h0, const Eigen::VectorXd& w, double gamma);

/// Eigenpairs of H_gamma in [lo, hi), which must lie inside the verified gap. Throws NumericalError when
/// a residual exceeds 1e-8.
OracleResult gap_spectrum(const TruncatedH0& h0, const Eigen::VectorXd& w, double gamma, double lo, double hi);

/// Groups ascending values into clusters whose neighbours are within tol.
void cluster_levels(const Eigen::VectorXd& values, double tol, std::vector<double>& levels, std::vector<int>& counts);

struct DeviationTable {
  bool counts_match = true;
  std::string note;
  std::vector<double> deviation;  // per model function after alignment
};

/// Compares sqrt(W) psi_k / ||sqrt(W) psi_k|| with model functions g (unit columns in l2 coordinates on
/// the same nodes). Oracle eigenvectors are taken deepest first; within each group of equal `group`
/// labels the oracle vectors are rotated by the unitary that best matches the model.
DeviationTable eigenfunction_compare(const OracleResult& result, const Eigen::VectorXd& w, double edge,
                                     const Eigen::MatrixXcd& g, const std::vector<int>& group);

/// Limiting functions g_k of the non-degenerate model at the H0 nodes in unit l2 coordinates, together
/// with group labels for equal nu (relative tolerance 1e-9).
Eigen::MatrixXcd model_functions_on_nodes(const TruncatedH0& h0, const GapEdge& edge,
                                          const NonDegenerateEdgeModel& model, const PerturbationSpec& W,
                                          std::vector<int>& group);

struct ConvergenceFit {
  double A_fit = 0.0;
  double B_fit = 0.0;
  double A_theory = 0.0;
  double rel_error = 0.0;  // |A_fit - A_theory| / |A_theory|
  double order = 0.0;      // slope of log|f/|gamma| - A_theory| against log|gamma|
  bool monotone = true;
  std::vector<double> gamma;
  std::vector<double> ratio;  // f(depth)/|gamma|
};

/// Least-squares fit f(depth_i)/|gamma_i| = A + B gamma_i. Needs at least 3 points.
ConvergenceFit convergence_study(Law law, int d, int codim, double calibration, const std::vector<double>& gamma,
                                 const std::vector<double>& depth, double A_theory);

}  // namespace vbl
