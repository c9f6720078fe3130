#include "vbl/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vbl/errors.hpp"
#include "vbl/parallel.hpp"

namespace vbl {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

PlaneWaveBasis::PlaneWaveBasis(int d, int cutoff) : d_(d), n_(cutoff) {
  if (d < 1 || d > 3) throw InvalidArgument("plane-wave basis dimension must be 1, 2 or 3");
  if (cutoff < 0) throw InvalidArgument("plane-wave cutoff must be nonnegative");
  const int w = 2 * cutoff + 1;
  const int total = d == 1 ? w : (d == 2 ? w * w : w * w * w);
  freqs_.reserve(total);
  for (int i = 0; i < total; ++i) {
    Freq m{0, 0, 0};
    int r = i;
    for (int j = d - 1; j >= 0; --j) {
      m[j] = r % w - cutoff;
      r /= w;
    }
    freqs_.push_back(m);
  }
}

int PlaneWaveBasis::index(const Freq& m) const {
  const int w = 2 * n_ + 1;
  int row = 0;
  for (int j = 0; j < d_; ++j) {
    if (std::abs(m[j]) > n_) return -1;
    row = row * w + (m[j] + n_);
  }
  for (int j = d_; j < 3; ++j)
    if (m[j] != 0) return -1;
  return row;
}

int default_cutoff(int d) { return d == 1 ? 16 : (d == 2 ? 8 : 4); }

Eigen::MatrixXcd assemble_fiber(const Point& p, const PotentialSpec& V, const PlaneWaveBasis& basis) {
  if (V.dimension() != basis.dimension()) throw InvalidArgument("potential and basis dimensions differ");
  if (basis.cutoff() < V.max_frequency())
    throw InvalidArgument("plane-wave cutoff " + std::to_string(basis.cutoff()) +
                          " cannot represent potential frequency " + std::to_string(V.max_frequency()));
  const int n = basis.size();
  const int d = basis.dimension();
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    const Freq& m = basis.frequency(r);
    double k2 = 0.0;
    for (int j = 0; j < d; ++j) {
      const double k = kTwoPi * m[j] + p[j];
      k2 += k * k;
    }
    h(r, r) = k2;
  }
  for (const auto& [q, c] : V.coefficients()) {
    for (int col = 0; col < n; ++col) {
      const Freq& mc = basis.frequency(col);
      const int row = basis.index({mc[0] + q[0], mc[1] + q[1], mc[2] + q[2]});
      if (row >= 0) h(row, col) += c;
    }
  }
  return h;
}

FiberSpectrum fiber_spectrum(const Point& p, const PotentialSpec& V, const PlaneWaveBasis& basis, int n_bands,
                             bool with_vectors) {
  if (n_bands < 1 || n_bands > basis.size()) throw InvalidArgument("n_bands must lie in [1, basis size]");
  const Eigen::MatrixXcd h = assemble_fiber(p, V, basis);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, with_vectors ? Eigen::ComputeEigenvectors
                                                                     : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalError("fiber eigensolver failed at p = (" + std::to_string(p[0]) + ", " + std::to_string(p[1]) +
                         ", " + std::to_string(p[2]) + ")");
  FiberSpectrum fs;
  fs.p = p;
  fs.eigenvalues = es.eigenvalues().head(n_bands);
  if (with_vectors) fs.eigenvectors = es.eigenvectors().leftCols(n_bands);
  return fs;
}

std::size_t CellGrid::size() const {
  std::size_t s = 1;
  for (int j = 0; j < d; ++j) s *= static_cast<std::size_t>(n);
  return s;
}

Point CellGrid::point(std::size_t index) const {
  Point x{};
  for (int j = d - 1; j >= 0; --j) {
    x[j] = -0.5 + static_cast<double>(index % n) / n;
    index /= n;
  }
  return x;
}

BlochFunction::BlochFunction(const FiberSpectrum& fs, const PlaneWaveBasis& basis, int band, const CellGrid& grid)
    : d_(basis.dimension()), p_(fs.p), band_(band), grid_(grid) {
  if (band < 0 || band >= fs.eigenvectors.cols()) throw InvalidArgument("Bloch band index out of range");
  if (grid.d != d_) throw InvalidArgument("cell grid dimension differs from basis");
  freqs_.reserve(basis.size());
  for (int r = 0; r < basis.size(); ++r) freqs_.push_back(basis.frequency(r));
  coeffs_ = fs.eigenvectors.col(band);

  const std::size_t np = grid.size();
  values_.resize(np);
  for (std::size_t i = 0; i < np; ++i) values_[i] = series(grid.point(i));

  // The grid is a periodic trapezoid rule on the cell, exact for |b|^2 once n exceeds twice the cutoff.
  double norm2 = 0.0, vmax = 0.0;
  for (const cplx& v : values_) {
    norm2 += std::norm(v);
    vmax = std::max(vmax, std::abs(v));
  }
  norm2 /= static_cast<double>(np);
  cplx phase = 1.0;
  for (const cplx& v : values_)
    if (std::abs(v) > 0.1 * vmax) {
      phase = std::conj(v) / std::abs(v);
      break;
    }
  const cplx scale = phase / std::sqrt(norm2);
  coeffs_ *= scale;
  for (cplx& v : values_) v *= scale;
}

cplx BlochFunction::series(const Point& x) const {
  cplx s = 0.0;
  for (std::size_t r = 0; r < freqs_.size(); ++r) {
    double phase = 0.0;
    for (int j = 0; j < d_; ++j) phase += (kTwoPi * freqs_[r][j] + p_[j]) * x[j];
    s += coeffs_[static_cast<Eigen::Index>(r)] * std::polar(1.0, phase);
  }
  return s;
}

cplx BlochFunction::evaluate(const Point& x) const {
  Point x0 = x;
  double shift = 0.0;
  for (int j = 0; j < d_; ++j) {
    const double l = std::floor(x[j] + 0.5);
    x0[j] = x[j] - l;
    shift += p_[j] * l;
  }
  return std::polar(1.0, shift) * series(x0);
}

BlochFunction BlochFunction::rephased(cplx unit) const {
  BlochFunction b = *this;
  b.coeffs_ *= unit;
  for (cplx& v : b.values_) v *= unit;
  return b;
}

double time_reversal_check(const PotentialSpec& V, const PlaneWaveBasis& basis, const MomentumGrid& grid,
                           int n_bands) {
  std::vector<double> dev(grid.size(), 0.0);
  parallel_for(grid.size(), [&](std::size_t i) {
    const Point p = grid.point(i);
    const Point q{-p[0], -p[1], -p[2]};
    const auto a = fiber_spectrum(p, V, basis, n_bands, false);
    const auto b = fiber_spectrum(q, V, basis, n_bands, false);
    dev[i] = (a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff();
  });
  return *std::max_element(dev.begin(), dev.end());
}

CutoffReport check_cutoff_convergence(const PotentialSpec& V, int cutoff, int n_bands,
                                      const std::vector<Point>& momenta, double tol, int max_cutoff) {
  const int d = V.dimension();
  CutoffReport rep;
  int n = std::max(cutoff, V.max_frequency());
  while (true) {
    const PlaneWaveBasis coarse(d, n), fine(d, 2 * n);
    std::vector<double> dev(momenta.size(), 0.0);
    parallel_for(momenta.size(), [&](std::size_t i) {
      const auto a = fiber_spectrum(momenta[i], V, coarse, n_bands, false);
      const auto b = fiber_spectrum(momenta[i], V, fine, n_bands, false);
      dev[i] = (a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff();
    });
    rep.cutoff = n;
    rep.deviation = momenta.empty() ? 0.0 : *std::max_element(dev.begin(), dev.end());
    rep.converged = rep.deviation <= tol;
    if (rep.converged || 2 * n > max_cutoff) return rep;
    n *= 2;
  }
}

}  // namespace vbl
