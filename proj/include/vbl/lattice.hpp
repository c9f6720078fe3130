#pragma once

#include <array>
#include <complex>
#include <map>
#include <string>
#include <vector>

namespace vbl {

using cplx = std::complex<double>;
/// Point in R^d; unused trailing coordinates are zero.
using Point = std::array<double, 3>;
/// Integer frequency / lattice vector; unused trailing entries are zero.
using Freq = std::array<int, 3>;

/// Unit square lattice Z^d, d in {1,2,3}. The fundamental cell is [-1/2,1/2]^d.
struct Lattice {
  int d = 1;

  explicit Lattice(int dim);
  double cell_volume() const { return 1.0; }
};

/// Real periodic potential V(x) = sum_m Vhat(m) exp(2 pi i m.x) with finitely many terms.
class PotentialSpec {
 public:
  struct CosineTerm {
    Freq m{};
    double amplitude = 0.0;  // contributes amplitude * cos(2 pi m.x)
  };

  static PotentialSpec zero(int d);
  /// Throws InvalidArgument when the table is not Hermitian, Vhat(-m) = conj(Vhat(m)).
  static PotentialSpec fourier(int d, std::map<Freq, cplx> coeffs);
  static PotentialSpec cosine_sum(int d, const std::vector<CosineTerm>& terms);

  int dimension() const { return d_; }
  const std::string& kind() const { return kind_; }
  const std::map<Freq, cplx>& coefficients() const { return coeffs_; }
  cplx coefficient(const Freq& m) const;
  /// Largest |m|_inf over nonzero coefficients.
  int max_frequency() const;
  /// Upper bound sum_m |Vhat(m)| >= ||V||_inf.
  double sup_bound() const;
  double evaluate(const Point& x) const;

 private:
  int d_ = 1;
  std::string kind_ = "fourier";
  std::map<Freq, cplx> coeffs_;
};

enum class BumpShape { box, gaussian };

/// One closed-form component of W.
/// box: amplitude * indicator of prod [c_j - w_j, c_j + w_j], with value 1/2 per axis on the faces.
/// gaussian: amplitude * exp(-sum (x_j - c_j)^2 / (2 w_j^2)).
struct Bump {
  BumpShape shape = BumpShape::box;
  Point center{};
  Point widths{0.5, 0.5, 0.5};
  double amplitude = 1.0;
};

struct PerturbationIntegrals {
  double integral = 0.0;
  double abs_integral = 0.0;
  bool abs_integral_exact = true;  // false when signed components overlap and |W| was integrated numerically
  bool decay_conditions = true;    // compact support or gaussian tails satisfy every moment condition
};

/// Decaying perturbation W built from boxes and gaussians.
class PerturbationSpec {
 public:
  /// kind is one of box, gaussian, sum, signed_sum. Only signed_sum admits negative amplitudes.
  PerturbationSpec(int d, std::string kind, std::vector<Bump> bumps);

  static PerturbationSpec box(int d, const Point& center, const Point& half_widths, double amplitude = 1.0);
  static PerturbationSpec gaussian(int d, const Point& center, double sigma, double amplitude = 1.0);

  int dimension() const { return d_; }
  const std::string& kind() const { return kind_; }
  const std::vector<Bump>& bumps() const { return bumps_; }
  bool definite() const { return definite_; }
  bool empty() const { return bumps_.empty(); }

  double evaluate(const Point& x) const;
  double positive_part(const Point& x) const;
  double negative_part(const Point& x) const;
  PerturbationIntegrals integrals() const;

  /// Axis-aligned box holding all but ~1e-10 of the mass of |W|.
  void support_box(Point& lo, Point& hi) const;
  /// Box outside of which |W| < floor.
  void floor_box(double floor, Point& lo, Point& hi) const;

  PerturbationSpec negated() const;
  PerturbationSpec scaled(double factor) const;

 private:
  int d_ = 1;
  std::string kind_;
  std::vector<Bump> bumps_;
  bool definite_ = true;
};

/// Uniform grid on [-pi, pi)^d, lexicographic order with axis 0 slowest.
class MomentumGrid {
 public:
  MomentumGrid(int d, std::array<int, 3> counts);
  MomentumGrid(int d, int n);

  int dimension() const { return d_; }
  std::size_t size() const { return total_; }
  const std::array<int, 3>& counts() const { return counts_; }
  Point point(std::size_t index) const;
  std::array<int, 3> multi_index(std::size_t index) const;
  std::size_t flat_index(const std::array<int, 3>& idx) const;
  double step(int axis) const;

 private:
  int d_;
  std::array<int, 3> counts_{1, 1, 1};
  std::size_t total_ = 1;
};

}  // namespace vbl
