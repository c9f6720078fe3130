#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vbl/fiber.hpp"
#include "vbl/lattice.hpp"

namespace vbl {

/// Tolerances for gap detection and edge refinement.
struct EdgeTolerances {
  double gap_tol = 1e-6;
  double refine_tol = 1e-9;
  double simple_tol = 1e-4;
  double morse_tol = 1e-6;
  double hessian_step = 1e-3;
};

/// Source of band energies lambda_1(p) <= lambda_2(p) <= ... on the torus.
class Dispersion {
 public:
  virtual ~Dispersion() = default;
  virtual int dimension() const = 0;
  virtual Eigen::VectorXd bands(const Point& p, int n_bands) const = 0;
};

/// Plane-wave fiber eigenvalues of -Delta + V.
class FiberDispersion : public Dispersion {
 public:
  FiberDispersion(PotentialSpec V, int cutoff);

  int dimension() const override { return V_.dimension(); }
  Eigen::VectorXd bands(const Point& p, int n_bands) const override;
  const PotentialSpec& potential() const { return V_; }
  const PlaneWaveBasis& basis() const { return basis_; }

 private:
  PotentialSpec V_;
  PlaneWaveBasis basis_;
};

struct BandStructure {
  MomentumGrid grid;
  int n_bands = 0;
  Eigen::MatrixXd values;  // rows: grid points, columns: bands
  int cutoff = 0;          // plane-wave cutoff, 0 when the source is not a fiber solver
};

BandStructure sweep_bands(const Dispersion& disp, const MomentumGrid& grid, int n_bands);

/// Gap between band j (1-based) and band j+1; j = 0 is the semi-infinite gap below band 1.
struct SpectralGap {
  int j = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = 0.0;
  double width() const { return upper - lower; }
  bool semi_infinite() const { return j == 0; }
};

std::vector<SpectralGap> find_gaps(const BandStructure& bs, double gap_tol = 1e-6);

enum class EdgeSide { upper, lower };

struct Extremum {
  Point p{};
  double value = 0.0;
  Eigen::MatrixXd hessian;
  double mass = 0.0;  // 1 / |det hessian|
  double simplicity_margin = std::numeric_limits<double>::infinity();
  bool simple = true;
  bool morse = true;
  std::optional<BlochFunction> bloch;
};

/// Point of a Morse-Bott extremal manifold with its quadrature weight.
struct ManifoldSample {
  Point k{};
  double weight = 0.0;
  Eigen::MatrixXd normal_hessian;
  double mass = 0.0;  // 1 / |det normal_hessian|
};

struct GapEdge {
  EdgeSide side = EdgeSide::upper;
  int d = 1;
  int band = 0;  // 0-based index of the band attaining the edge
  double value = 0.0;
  std::vector<Extremum> extrema;
  bool degenerate = false;
  int manifold_dim = 0;
  int codim = 0;
  std::vector<ManifoldSample> samples;
  std::string manifold;  // point, circle or sphere

  bool all_simple() const;
  bool all_morse() const;
};

/// Symmetric Hessian of f at p0 by central differences, Richardson-extrapolated over h and h/2.
Eigen::MatrixXd hessian_fd(const std::function<double(const Point&)>& f, int d, const Point& p0, double h);

/// Locates and refines the extrema of the band bounding `gap` on `side`.
GapEdge refine_edge(const Dispersion& disp, const BandStructure& bs, const SpectralGap& gap, EdgeSide side,
                    const EdgeTolerances& tol = {});

/// Attaches phase-fixed Bloch functions to every extremum of a fiber-solver edge.
void attach_bloch(GapEdge& edge, const FiberDispersion& disp, const CellGrid& grid);

/// Gap with both edges refined on the given dispersion.
SpectralGap refine_gap(const Dispersion& disp, const BandStructure& bs, const SpectralGap& gap,
                       const EdgeTolerances& tol = {});

/// Whole-space Fourier multiplier a(k) with a Morse-Bott or point minimum.
class SyntheticDispersion {
 public:
  /// a(k) = alpha (|k| - k0)^2 + c. k0 > 0 gives a circle (d=2) or sphere (d=3), k0 = 0 a point.
  static SyntheticDispersion radial_well(int d, double k0, double alpha = 1.0, double c = 0.0);
  /// a(k) = (k1^2 + k2^2 - r^2)^2 + k3^2 in d=3, minimal on a circle of radius r (codimension 2).
  static SyntheticDispersion circle_well_3d(double r);

  int dimension() const { return d_; }
  const std::string& name() const { return name_; }
  double symbol(const Point& k) const;
  double minimum() const { return c_; }
  int codimension() const { return codim_; }
  const std::string& manifold() const { return manifold_; }
  double radius() const { return k0_; }
  double alpha() const { return alpha_; }

 private:
  std::string name_;
  int d_ = 2;
  double k0_ = 0.0;
  double alpha_ = 1.0;
  double c_ = 0.0;
  int codim_ = 1;
  std::string manifold_;
};

/// Samples the minimum manifold of a synthetic symbol; n_samples is the angular resolution.
GapEdge synthetic_edge(const SyntheticDispersion& sd, int n_samples, const EdgeTolerances& tol = {});

}  // namespace vbl
