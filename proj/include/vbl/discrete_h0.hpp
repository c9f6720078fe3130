#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vbl/bands.hpp"
#include "vbl/lanczos.hpp"
#include "vbl/lattice.hpp"

namespace vbl {

enum class H0Geometry { periodic_box, radial };

/// Finite realization of H0 acting on l2 coordinates phi_i = sqrt(measure_i) u(x_i), so that the
/// matrix is symmetric and multiplication by W stays diagonal.
struct TruncatedH0 {
  H0Geometry geometry = H0Geometry::periodic_box;
  int d = 1;
  double L = 0.0;  // box half-width, or outer radius for the radial operator
  double h = 0.0;
  int channel = 0;                 // angular momentum of the radial operator
  int points_per_side = 0;         // box: nodes per axis; radial: number of shells
  SpMat matrix;
  std::vector<Point> nodes;
  Eigen::VectorXd measure;
  PotentialSpec V = PotentialSpec::zero(1);
  SpectralGap continuum_gap;       // plane-wave gap the box was verified against
  double lower_edge = 0.0;         // verified discrete gap
  double upper_edge = 0.0;
  bool inertia_verified = false;

  int size() const { return static_cast<int>(nodes.size()); }
  double gap_width() const { return upper_edge - lower_edge; }
  /// W at the nodes. The radial operator needs W radial about the origin.
  Eigen::VectorXd sample(const PerturbationSpec& W) const;
  /// Grid function u from l2 coordinates.
  Eigen::VectorXd to_function(const Eigen::VectorXd& phi) const;
  /// Degeneracy of every eigenvalue from the angular factor (1 for the box).
  int angular_multiplicity() const;
};

/// Bloch fiber of the central-difference operator on one cell with spacing h.
class FdFiberDispersion : public Dispersion {
 public:
  FdFiberDispersion(PotentialSpec V, double h);

  int dimension() const override { return V_.dimension(); }
  Eigen::VectorXd bands(const Point& p, int n_bands) const override;
  Eigen::MatrixXcd fiber_matrix(const Point& p) const;

 private:
  PotentialSpec V_;
  double h_;
  int n_;
};

struct TruncationOptions {
  double margin_fraction = 0.05;  // of the gap width, or of max(1, |edge|) for the semi-infinite gap
  bool verify_inertia = true;
};

/// Central-difference -Delta + V on the periodic box [-L, L)^d. Gap j (0 = below band 1) of the
/// discrete operator is located on the discrete Bloch fiber and checked against the plane-wave gap.
/// Throws NumericalError "refine h / enlarge cutoff comparison" when the discrete gap does not contain
/// the continuum gap shrunk by the margin.
TruncatedH0 build_truncated_h0(const PotentialSpec& V, double L, double h, int gap_index = 0,
                               const TruncationOptions& opt = {});

/// Cell-centred radial part of -Delta in d in {2, 3} for angular momentum l on (0, R) with a Dirichlet
/// wall at R. Its spectrum is positive, so the semi-infinite gap ends at 0.
TruncatedH0 build_radial_h0(int d, int channel, double R, double h);

/// Number of independent angular functions in channel l: 1 or 2 for d=2, 2l+1 for d=3.
int channel_multiplicity(int d, int channel);

/// Box half-width for a level of the given depth below an edge with largest Hessian eigenvalue
/// `curvature`: max(L_min, ceil(6/kappa)) with kappa = sqrt(2 depth / curvature). Clipped at cap.
double auto_half_width(double L_min, double depth, double curvature, double cap, bool* capped = nullptr);

/// Radial k-space Nystrom discretization of a synthetic multiplier plus a radial gaussian W in one
/// angular channel. Matrix entries act on phi_i = sqrt(w_i k_i^(d-1)) f(k_i).
struct KSpaceChannel {
  int d = 2;
  int channel = 0;
  Eigen::VectorXd k;
  Eigen::VectorXd weights;  // radial quadrature weights
  Eigen::VectorXd symbol;   // a(k_i)
  Eigen::MatrixXd kernel;   // symmetrized W kernel
  double edge = 0.0;        // minimum of the symbol

  Eigen::MatrixXd hamiltonian(double gamma) const;
};

struct KSpaceOptions {
  int order = 12;           // Gauss points per panel
  double finest = 1e-7;     // smallest graded panel next to the minimum
  double grading = 0.5;     // panel length ratio towards the minimum
  double max_panel = 0.25;
  double tail_sigmas = 12.0;  // k range beyond the minimum in units of 1/sigma
};

/// Needs a radial_well symbol and a single isotropic gaussian W centred at the origin.
KSpaceChannel build_kspace_channel(const SyntheticDispersion& sd, const PerturbationSpec& W, int channel,
                                   const KSpaceOptions& opt = {});

}  // namespace vbl
