#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vbl/lattice.hpp"

namespace vbl {

/// Frequencies {m in Z^d : |m|_inf <= N}, lexicographic with axis 0 slowest.
class PlaneWaveBasis {
 public:
  PlaneWaveBasis(int d, int cutoff);

  int dimension() const { return d_; }
  int cutoff() const { return n_; }
  int size() const { return static_cast<int>(freqs_.size()); }
  const Freq& frequency(int row) const { return freqs_[row]; }
  /// Row of m, or -1 when m lies outside the basis.
  int index(const Freq& m) const;

 private:
  int d_;
  int n_;
  std::vector<Freq> freqs_;
};

/// Default plane-wave cutoff per dimension.
int default_cutoff(int d);

/// Matrix of (D + i p)^2 + V: diagonal |2 pi m + p|^2, off-diagonal Vhat(m - m').
/// Throws InvalidArgument when the cutoff is below the highest frequency of V.
Eigen::MatrixXcd assemble_fiber(const Point& p, const PotentialSpec& V, const PlaneWaveBasis& basis);

struct FiberSpectrum {
  Point p{};
  Eigen::VectorXd eigenvalues;    // ascending
  Eigen::MatrixXcd eigenvectors;  // columns are Fourier coefficients, orthonormal
};

/// Lowest n_bands eigenpairs of the fiber matrix at p.
FiberSpectrum fiber_spectrum(const Point& p, const PotentialSpec& V, const PlaneWaveBasis& basis, int n_bands,
                             bool with_vectors = true);

/// Uniform grid x_i = -1/2 + i/n per axis on the unit cell.
struct CellGrid {
  int d = 1;
  int n = 64;

  std::size_t size() const;
  Point point(std::size_t index) const;
};

/// b(x) = exp(i p.x) sum_m c_m exp(2 pi i m.x), unit L2 norm on the cell, phase fixed.
class BlochFunction {
 public:
  BlochFunction(const FiberSpectrum& fs, const PlaneWaveBasis& basis, int band, const CellGrid& grid);

  const Point& momentum() const { return p_; }
  int band() const { return band_; }
  const CellGrid& grid() const { return grid_; }
  const std::vector<cplx>& values() const { return values_; }
  const Eigen::VectorXcd& coefficients() const { return coeffs_; }
  /// Value at any x in R^d, folded into the cell and extended by b(x + l) = exp(i p.l) b(x).
  cplx evaluate(const Point& x) const;
  /// Same function multiplied by a unit scalar (phase changes leave all physics invariant).
  BlochFunction rephased(cplx unit) const;

 private:
  cplx series(const Point& x) const;

  int d_;
  Point p_{};
  int band_;
  CellGrid grid_;
  std::vector<Freq> freqs_;
  Eigen::VectorXcd coeffs_;
  std::vector<cplx> values_;
};

/// max over the grid and bands of |lambda_n(p) - lambda_n(-p)|.
double time_reversal_check(const PotentialSpec& V, const PlaneWaveBasis& basis, const MomentumGrid& grid,
                           int n_bands);

struct CutoffReport {
  int cutoff = 0;         // cutoff that passed, or the last one tried
  double deviation = 0;   // max |lambda_n(N) - lambda_n(2N)| over the probe momenta
  bool converged = false;
};

/// Compares lambda_1..lambda_nbands at cutoffs N and 2N on the given momenta, doubling N
/// up to max_cutoff until the deviation drops below tol.
CutoffReport check_cutoff_convergence(const PotentialSpec& V, int cutoff, int n_bands,
                                      const std::vector<Point>& momenta, double tol = 1e-8, int max_cutoff = 64);

}  // namespace vbl
