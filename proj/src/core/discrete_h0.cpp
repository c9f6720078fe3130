#include "vbl/discrete_h0.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vbl/errors.hpp"
#include "vbl/fiber.hpp"
#include "vbl/quadrature.hpp"

namespace vbl {

namespace {

using std::numbers::pi;

int checked_inverse(double h, const char* what) {
  if (!(h > 0)) throw InvalidArgument(std::string(what) + " must be positive");
  const double inv = 1.0 / h;
  const long n = std::lround(inv);
  if (std::abs(inv - static_cast<double>(n)) > 1e-9 * inv) throw InvalidArgument(std::string(what) + " must divide the period");
  return static_cast<int>(n);
}

// Single isotropic gaussian centred at the origin; returns sigma and amplitude.
void radial_gaussian(const PerturbationSpec& W, int d, double& sigma, double& amplitude) {
  if (W.bumps().size() != 1 || W.bumps()[0].shape != BumpShape::gaussian)
    throw InvalidArgument("radial reduction needs a single gaussian W");
  const Bump& b = W.bumps()[0];
  for (int j = 0; j < d; ++j) {
    if (b.center[j] != 0.0) throw InvalidArgument("radial reduction needs W centred at the origin");
    if (b.widths[j] != b.widths[0]) throw InvalidArgument("radial reduction needs an isotropic gaussian");
  }
  sigma = b.widths[0];
  amplitude = b.amplitude;
}

}  // namespace

Eigen::VectorXd TruncatedH0::sample(const PerturbationSpec& W) const {
  if (W.dimension() != d) throw InvalidArgument("W dimension does not match H0");
  if (geometry == H0Geometry::radial) {
    double sigma = 0.0, amp = 0.0;
    radial_gaussian(W, d, sigma, amp);
  }
  Eigen::VectorXd w(size());
  for (int i = 0; i < size(); ++i) w[i] = W.evaluate(nodes[static_cast<std::size_t>(i)]);
  return w;
}

Eigen::VectorXd TruncatedH0::to_function(const Eigen::VectorXd& phi) const {
  return phi.cwiseQuotient(measure.cwiseSqrt());
}

int TruncatedH0::angular_multiplicity() const {
  return geometry == H0Geometry::radial ? channel_multiplicity(d, channel) : 1;
}

int channel_multiplicity(int d, int channel) {
  if (channel < 0) throw InvalidArgument("channel must be nonnegative");
  if (d == 2) return channel == 0 ? 1 : 2;
  if (d == 3) return 2 * channel + 1;
  return 1;
}

FdFiberDispersion::FdFiberDispersion(PotentialSpec V, double h) : V_(std::move(V)), h_(h) {
  n_ = checked_inverse(h, "grid spacing");
  if (n_ < 4) throw InvalidArgument("grid spacing must be at most 1/4");
}

Eigen::MatrixXcd FdFiberDispersion::fiber_matrix(const Point& p) const {
  const int d = V_.dimension();
  int size = 1;
  for (int j = 0; j < d; ++j) size *= n_;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(size, size);
  const double inv_h2 = 1.0 / (h_ * h_);
  std::array<int, 3> stride{1, 1, 1};
  for (int j = d - 2; j >= 0; --j) stride[j] = stride[j + 1] * n_;
  for (int i = 0; i < size; ++i) {
    Point x{};
    std::array<int, 3> idx{};
    int rem = i;
    for (int j = 0; j < d; ++j) {
      idx[j] = rem / stride[j];
      rem %= stride[j];
      x[j] = idx[j] * h_;
    }
    m(i, i) += 2.0 * d * inv_h2 + V_.evaluate(x);
    for (int j = 0; j < d; ++j) {
      const bool wraps = idx[j] == n_ - 1;
      const int nb = wraps ? i - (n_ - 1) * stride[j] : i + stride[j];
      const cplx phase = wraps ? std::polar(1.0, p[j]) : cplx(1.0);
      m(i, nb) -= phase * inv_h2;
      m(nb, i) -= std::conj(phase) * inv_h2;
    }
  }
  return m;
}

Eigen::VectorXd FdFiberDispersion::bands(const Point& p, int n_bands) const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(fiber_matrix(p), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("discrete fiber eigensolver failed");
  return es.eigenvalues().head(std::min<Eigen::Index>(n_bands, es.eigenvalues().size()));
}

TruncatedH0 build_truncated_h0(const PotentialSpec& V, double L, double h, int gap_index,
                               const TruncationOptions& opt) {
  const int d = V.dimension();
  const int per_cell = checked_inverse(h, "grid spacing");
  if (per_cell < 4) throw InvalidArgument("grid spacing must be at most 1/4");
  const long cells = std::lround(2.0 * L);
  if (L < 1.0 || std::abs(2.0 * L - static_cast<double>(cells)) > 1e-9 || std::abs(L - std::round(L)) > 1e-9)
    throw InvalidArgument("box half-width must be a positive integer number of periods");
  if (gap_index < 0) throw InvalidArgument("gap index must be nonnegative");

  TruncatedH0 h0;
  h0.geometry = H0Geometry::periodic_box;
  h0.d = d;
  h0.L = std::round(L);
  h0.h = h;
  h0.V = V;
  const int n_side = static_cast<int>(cells) * per_cell;
  h0.points_per_side = n_side;

  // Continuum gap from the plane-wave fiber, discrete gap from the finite-difference fiber.
  const int grid_n = d == 1 ? 64 : (d == 2 ? 16 : 8);
  const MomentumGrid grid(d, grid_n);
  const int n_bands = gap_index + 3;
  const FiberDispersion pw(V, std::max(default_cutoff(d), V.max_frequency()));
  const BandStructure bs_pw = sweep_bands(pw, grid, n_bands);
  const auto gaps_pw = find_gaps(bs_pw);
  auto pick = [&](const std::vector<SpectralGap>& gaps) -> const SpectralGap* {
    for (const auto& g : gaps)
      if (g.j == gap_index) return &g;
    return nullptr;
  };
  const SpectralGap* gc = pick(gaps_pw);
  if (!gc) throw InvalidArgument("gap " + std::to_string(gap_index) + " is not open");
  h0.continuum_gap = refine_gap(pw, bs_pw, *gc);

  const FdFiberDispersion fd(V, h);
  const BandStructure bs_fd = sweep_bands(fd, grid, n_bands);
  const auto gaps_fd = find_gaps(bs_fd);
  const SpectralGap* gd = pick(gaps_fd);
  if (!gd) throw NumericalError("refine h / enlarge cutoff comparison: discrete gap closed");
  const SpectralGap disc = refine_gap(fd, bs_fd, *gd);
  h0.lower_edge = disc.lower;
  h0.upper_edge = disc.upper;

  const SpectralGap& c = h0.continuum_gap;
  const double margin =
      opt.margin_fraction * (c.semi_infinite() ? std::max(1.0, std::abs(c.upper)) : c.width());
  if (disc.upper < c.upper - margin || (!c.semi_infinite() && disc.lower > c.lower + margin))
    throw NumericalError("refine h / enlarge cutoff comparison: discrete gap (" + std::to_string(disc.lower) + ", " +
                         std::to_string(disc.upper) + ") misses the shrunk continuum gap");

  // Assembly.
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= static_cast<std::size_t>(n_side);
  std::array<std::size_t, 3> stride{1, 1, 1};
  for (int j = d - 2; j >= 0; --j) stride[j] = stride[j + 1] * static_cast<std::size_t>(n_side);
  h0.nodes.resize(total);
  h0.measure = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(total), std::pow(h, d));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(total * static_cast<std::size_t>(2 * d + 1));
  const double inv_h2 = 1.0 / (h * h);
  for (std::size_t i = 0; i < total; ++i) {
    Point x{};
    std::size_t rem = i;
    std::array<int, 3> idx{};
    for (int j = 0; j < d; ++j) {
      idx[j] = static_cast<int>(rem / stride[j]);
      rem %= stride[j];
      x[j] = -h0.L + idx[j] * h;
    }
    h0.nodes[i] = x;
    trip.emplace_back(i, i, 2.0 * d * inv_h2 + V.evaluate(x));
    for (int j = 0; j < d; ++j) {
      const std::size_t nb = idx[j] == n_side - 1 ? i - static_cast<std::size_t>(n_side - 1) * stride[j] : i + stride[j];
      trip.emplace_back(i, nb, -inv_h2);
      trip.emplace_back(nb, i, -inv_h2);
    }
  }
  h0.matrix.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  h0.matrix.setFromTriplets(trip.begin(), trip.end());
  h0.matrix.makeCompressed();

  if (opt.verify_inertia) {
    const double eps = 1e-9 * std::max(1.0, std::abs(h0.upper_edge));
    const int below_upper = ShiftedFactor(h0.matrix, h0.upper_edge - eps).negative_count();
    int inside = below_upper;
    if (!c.semi_infinite()) inside -= ShiftedFactor(h0.matrix, h0.lower_edge + eps).negative_count();
    if (inside != 0)
      throw NumericalError("refine h / enlarge cutoff comparison: " + std::to_string(inside) +
                           " box eigenvalues inside the discrete gap");
    h0.inertia_verified = true;
  }
  return h0;
}

TruncatedH0 build_radial_h0(int d, int channel, double R, double h) {
  if (d != 2 && d != 3) throw InvalidArgument("radial operator needs d = 2 or 3");
  if (!(h > 0) || !(R > 4 * h)) throw InvalidArgument("radial operator needs 0 < 4h < R");
  if (channel < 0) throw InvalidArgument("channel must be nonnegative");
  const int n = static_cast<int>(std::ceil(R / h - 1e-9));
  TruncatedH0 h0;
  h0.geometry = H0Geometry::radial;
  h0.d = d;
  h0.h = h;
  h0.L = n * h;
  h0.channel = channel;
  h0.points_per_side = n;
  h0.V = PotentialSpec::zero(d);
  h0.continuum_gap = SpectralGap{};
  h0.lower_edge = -std::numeric_limits<double>::infinity();
  h0.upper_edge = 0.0;
  h0.nodes.resize(static_cast<std::size_t>(n));
  h0.measure.resize(n);
  const double cl = static_cast<double>(channel) * (channel + d - 2);
  auto face = [&](double r) { return std::pow(r, d - 1); };
  std::vector<double> diag(static_cast<std::size_t>(n)), off(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) * h;
    h0.nodes[static_cast<std::size_t>(i)] = Point{r, 0.0, 0.0};
    h0.measure[i] = h * face(r);
    const double inner = face(i * h) / h;
    // Dirichlet wall half a cell beyond the last node
    const double outer = i + 1 < n ? face((i + 1) * h) / h : 2.0 * face(n * h) / h;
    diag[static_cast<std::size_t>(i)] = inner + outer + h * face(r) * cl / (r * r);
    if (i + 1 < n) off[static_cast<std::size_t>(i)] = -face((i + 1) * h) / h;
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(3 * n));
  for (int i = 0; i < n; ++i) {
    const double si = std::sqrt(h0.measure[i]);
    trip.emplace_back(i, i, diag[static_cast<std::size_t>(i)] / h0.measure[i]);
    if (i + 1 < n) {
      const double v = off[static_cast<std::size_t>(i)] / (si * std::sqrt(h0.measure[i + 1]));
      trip.emplace_back(i, i + 1, v);
      trip.emplace_back(i + 1, i, v);
    }
  }
  h0.matrix.resize(n, n);
  h0.matrix.setFromTriplets(trip.begin(), trip.end());
  h0.matrix.makeCompressed();
  h0.inertia_verified = true;  // Dirichlet form is positive definite
  return h0;
}

double auto_half_width(double L_min, double depth, double curvature, double cap, bool* capped) {
  if (!(depth > 0) || !(curvature > 0)) throw InvalidArgument("auto_half_width needs positive depth and curvature");
  const double kappa = std::sqrt(2.0 * depth / curvature);
  double L = std::max(L_min, std::ceil(6.0 / kappa));
  const bool clip = L > cap;
  if (capped) *capped = clip;
  return clip ? cap : L;
}

Eigen::MatrixXd KSpaceChannel::hamiltonian(double gamma) const {
  Eigen::MatrixXd a = gamma * kernel;
  a.diagonal() += symbol;
  return a;
}

KSpaceChannel build_kspace_channel(const SyntheticDispersion& sd, const PerturbationSpec& W, int channel,
                                   const KSpaceOptions& opt) {
  if (sd.name() != "radial_well") throw InvalidArgument("k-space channels need a radial_well symbol");
  const int d = sd.dimension();
  if (d != 2 && d != 3) throw InvalidArgument("k-space channels need d = 2 or 3");
  if (channel < 0) throw InvalidArgument("channel must be nonnegative");
  double sigma = 0.0, amp = 0.0;
  radial_gaussian(W, d, sigma, amp);
  const double k0 = sd.radius();
  const double kmax = k0 + opt.tail_sigmas / sigma;

  // Panels graded geometrically towards k0 from both sides.
  std::vector<double> breaks{0.0};
  auto graded = [&](double from, double to) {
    // from is the far end, to is k0; lengths shrink by `grading` towards k0
    std::vector<double> pts;
    double t = std::abs(to - from);
    const double dir = to > from ? 1.0 : -1.0;
    while (t > opt.finest) {
      pts.push_back(to - dir * t);
      t *= opt.grading;
    }
    pts.push_back(to - dir * t);
    return pts;
  };
  if (k0 > 0) {
    const double t0 = std::min(k0, 1.0);
    for (double b : panel_breaks(0.0, k0 - t0, {}, opt.max_panel)) breaks.push_back(b);
    for (double b : graded(k0 - t0, k0)) breaks.push_back(b);
    breaks.push_back(k0);
    auto right = graded(k0 + 1.0, k0);
    std::reverse(right.begin(), right.end());
    for (double b : right) breaks.push_back(b);
    for (double b : panel_breaks(k0 + 1.0, kmax, {}, opt.max_panel)) breaks.push_back(b);
  } else {
    auto right = graded(1.0, 0.0);
    std::reverse(right.begin(), right.end());
    for (double b : right) breaks.push_back(b);
    for (double b : panel_breaks(1.0, kmax, {}, opt.max_panel)) breaks.push_back(b);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(), [](double a, double b) { return std::abs(a - b) < 1e-300; }),
               breaks.end());
  const Rule1d rule = composite_gauss_legendre(breaks, opt.order);

  KSpaceChannel ch;
  ch.d = d;
  ch.channel = channel;
  const int n = static_cast<int>(rule.size());
  ch.k.resize(n);
  ch.weights.resize(n);
  ch.symbol.resize(n);
  Eigen::VectorXd root(n);
  for (int i = 0; i < n; ++i) {
    ch.k[i] = rule.nodes[static_cast<std::size_t>(i)];
    ch.weights[i] = rule.weights[static_cast<std::size_t>(i)];
    ch.symbol[i] = sd.symbol(Point{ch.k[i], 0.0, 0.0});
    root[i] = std::sqrt(ch.weights[i] * std::pow(ch.k[i], d - 1));
  }
  ch.edge = sd.minimum();
  const double s2 = sigma * sigma;
  const double pref = d == 2 ? amp * s2 : amp * s2 * sigma * std::sqrt(2.0 / pi);
  ch.kernel.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double ki = ch.k[i], kj = ch.k[j];
      const double z = s2 * ki * kj;
      // exp(-s2 (ki^2 + kj^2) / 2) I(z) = exp(-s2 (ki - kj)^2 / 2) * exp(-z) I(z)
      const double gauss = std::exp(-0.5 * s2 * (ki - kj) * (ki - kj));
      double scaled_bessel = 0.0;
      if (d == 2) {
        scaled_bessel = z < 600.0 ? std::exp(-z) * std::cyl_bessel_i(static_cast<double>(channel), z)
                                  : (1.0 - (4.0 * channel * channel - 1.0) / (8.0 * z)) / std::sqrt(2.0 * pi * z);
      } else if (z == 0.0) {
        scaled_bessel = channel == 0 ? 1.0 : 0.0;
      } else {
        scaled_bessel = z < 600.0 ? std::exp(-z) * std::sqrt(pi / (2.0 * z)) * std::cyl_bessel_i(channel + 0.5, z)
                                  : (1.0 - channel * (channel + 1.0) / (2.0 * z)) / (2.0 * z);
      }
      const double v = pref * gauss * scaled_bessel * root[i] * root[j];
      ch.kernel(i, j) = v;
      ch.kernel(j, i) = v;
    }
  }
  return ch;
}

}  // namespace vbl
