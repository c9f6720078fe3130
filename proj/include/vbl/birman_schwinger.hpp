#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vbl/discrete_h0.hpp"
#include "vbl/oracle.hpp"

namespace vbl {

/// X_W(lambda) = W^(1/2) (H0 - lambda)^-1 |W|^(1/2) on the nodes where |W| > w_floor, with the signed
/// root W^(1/2) = sign(W) |W|^(1/2).
struct BSOperator {
  double lambda = 0.0;
  std::vector<int> support;
  Eigen::VectorXd root_abs;  // |W|^(1/2) on the support
  Eigen::VectorXd sign;      // sign(W) on the support
  Eigen::MatrixXd matrix;
  bool definite = true;
  double symmetry_defect = 0.0;  // ||X - X^T||_F before symmetrization (definite W only)
};

/// Throws InvalidArgument when lambda is not strictly inside the verified gap and NumericalError when a
/// column solve fails its residual check.
BSOperator assemble_bs(const TruncatedH0& h0, const Eigen::VectorXd& w, double lambda, double w_floor = 1e-14);

/// Sorted eigenvalues of a definite BS operator: positive descending, negative ascending, dropping
/// |mu| <= mu_floor.
void bs_spectrum(const BSOperator& x, double mu_floor, Eigen::VectorXd& positive, Eigen::VectorXd& negative);

struct BranchTable {
  std::vector<double> lambdas;            // ascending
  std::vector<Eigen::VectorXd> positive;  // mu_1^+ >= mu_2^+ >= ... per lambda
  std::vector<Eigen::VectorXd> negative;  // mu_1^- <= mu_2^- <= ... per lambda
  double mu_floor = 0.0;

  /// k-th positive branch (0-based) at sample i; 0 where the branch does not exist.
  double mu_plus(int k, std::size_t i) const;
  double mu_minus(int k, std::size_t i) const;
  int max_positive_rank() const;
  /// Largest drop mu_k^+(lambda_i) - mu_k^+(lambda_(i+1)) over all samples and ranks (<= 0 when monotone).
  double worst_monotonicity_violation() const;
  /// First sample index where the k-th positive branch lies above mu_floor, or -1.
  int domain_start(int k) const;
  /// max |mu_1^-| over the samples.
  double max_negative_magnitude() const;
};

struct BranchFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

/// Least-squares fit of log mu_k^+ against log(|edge - lambda|) (power law) or of mu_k^+ against
/// ln(1/|edge - lambda|) (logarithmic law), over samples with |edge - lambda| in [dist_lo, dist_hi].
BranchFit fit_branch_divergence(const BranchTable& table, double edge, int k, double dist_lo, double dist_hi,
                                bool logarithmic);

/// Geometric grid edge -/+ (scale/4) 2^-i, i = 0..n-1, ascending, towards the given edge of the gap.
std::vector<double> edge_lambda_grid(double edge, EdgeSide side, double scale, int n = 21);

/// Ranked eigenvalues of X_W(lambda) on every sample. W must be definite.
BranchTable characteristic_branches(const TruncatedH0& h0, const Eigen::VectorXd& w, const std::vector<double>& lambdas,
                                    double w_floor = 1e-14);

struct PencilSolution {
  double gamma = 0.0;
  std::vector<double> roots;         // ascending; one per crossing branch
  std::vector<int> ranks;            // branch rank (0-based) of each root
  std::vector<double> levels;        // roots merged within the cluster tolerance
  std::vector<int> multiplicities;   // branches per level times the angular multiplicity
  int expected = 0;                  // eigenvalues of H_gamma in the gap by inertia
  int evaluations = 0;
};

/// Impurity eigenvalues in the gap: lambda with mu_k(lambda) = -1/gamma, bracketed on the table samples
/// (extended towards the edges until the inertia count of H_gamma is reached) and refined by TOMS 748.
/// W must be definite. roots.size() < expected means some root lies within 1e-12 of an edge.
PencilSolution solve_pencil(const TruncatedH0& h0, const Eigen::VectorXd& w, const BranchTable& table, double gamma,
                            double w_floor = 1e-14);

/// Number of singular values of I + gamma X_W(lambda) below rank_tol.
int pencil_kernel_dimension(const TruncatedH0& h0, const Eigen::VectorXd& w, double lambda, double gamma,
                            double rank_tol = 1e-8, double w_floor = 1e-14);

struct IndefiniteSplit {
  Eigen::MatrixXd re_x;     // (X_W + X_W^T) / 2 on the support of W
  Eigen::MatrixXd x_plus;   // X_(W+) embedded in the same index set
  Eigen::MatrixXd x_minus;  // X_(W-) embedded in the same index set
  double residual = 0.0;    // ||re_x - (x_plus - x_minus)||_F
};

IndefiniteSplit indefinite_split(const TruncatedH0& h0, const Eigen::VectorXd& w, double lambda, double w_floor = 1e-14);

struct MultiplicityReport {
  std::vector<double> gamma;
  std::vector<std::vector<double>> levels;
  std::vector<std::vector<int>> multiplicities;
  int bound = 0;
  bool within_bound = true;
};

/// Oracle eigenvalues of H_gamma in [lo, hi) clustered at 1e-9 and compared against `bound`.
MultiplicityReport multiplicity_bound_check(const TruncatedH0& h0, const Eigen::VectorXd& w,
                                            const std::vector<double>& gammas, double lo, double hi, int bound);

}  // namespace vbl
