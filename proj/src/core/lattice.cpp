#include "vbl/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vbl/errors.hpp"
#include "vbl/quadrature.hpp"

namespace vbl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// exp(-t^2/2) tail beyond t = 7 carries < 3e-12 of the mass per axis.
constexpr double kGaussMassCut = 7.0;

void check_dim(int d) {
  if (d < 1 || d > 3) throw InvalidArgument("dimension must be 1, 2 or 3, got " + std::to_string(d));
}

Freq negate(const Freq& m) { return {-m[0], -m[1], -m[2]}; }

double box_factor(double x, double c, double w) {
  const double t = std::abs(x - c);
  if (t < w) return 1.0;
  if (t == w) return 0.5;
  return 0.0;
}

double bump_value(const Bump& b, int d, const Point& x) {
  double v = b.amplitude;
  if (b.shape == BumpShape::box) {
    for (int j = 0; j < d && v != 0.0; ++j) v *= box_factor(x[j], b.center[j], b.widths[j]);
    return v;
  }
  double q = 0.0;
  for (int j = 0; j < d; ++j) {
    const double t = (x[j] - b.center[j]) / b.widths[j];
    q += t * t;
  }
  return v * std::exp(-0.5 * q);
}

double bump_mass(const Bump& b, int d) {
  double m = 1.0;
  for (int j = 0; j < d; ++j)
    m *= (b.shape == BumpShape::box) ? 2.0 * b.widths[j] : std::sqrt(kTwoPi) * b.widths[j];
  return m;
}

void bump_extent(const Bump& b, int d, double cut, Point& lo, Point& hi) {
  for (int j = 0; j < d; ++j) {
    const double r = (b.shape == BumpShape::box) ? b.widths[j] : cut * b.widths[j];
    lo[j] = b.center[j] - r;
    hi[j] = b.center[j] + r;
  }
}

bool overlap(const Bump& a, const Bump& b, int d) {
  if (a.shape == BumpShape::gaussian || b.shape == BumpShape::gaussian) return true;
  for (int j = 0; j < d; ++j)
    if (std::abs(a.center[j] - b.center[j]) >= a.widths[j] + b.widths[j]) return false;
  return true;
}

}  // namespace

Lattice::Lattice(int dim) : d(dim) { check_dim(dim); }

PotentialSpec PotentialSpec::zero(int d) {
  check_dim(d);
  PotentialSpec v;
  v.d_ = d;
  v.kind_ = "fourier";
  return v;
}

PotentialSpec PotentialSpec::fourier(int d, std::map<Freq, cplx> coeffs) {
  check_dim(d);
  PotentialSpec v;
  v.d_ = d;
  v.kind_ = "fourier";
  for (const auto& [m, c] : coeffs) {
    for (int j = d; j < 3; ++j)
      if (m[j] != 0) throw InvalidArgument("potential frequency has more components than the dimension");
    if (c == cplx(0.0)) continue;
    const auto it = coeffs.find(negate(m));
    const cplx partner = (it == coeffs.end()) ? cplx(0.0) : it->second;
    if (std::abs(partner - std::conj(c)) > 1e-14 * std::max(1.0, std::abs(c)))
      throw InvalidArgument("potential coefficients are not Hermitian: Vhat(-m) != conj(Vhat(m))");
    v.coeffs_[m] = c;
  }
  return v;
}

PotentialSpec PotentialSpec::cosine_sum(int d, const std::vector<CosineTerm>& terms) {
  check_dim(d);
  std::map<Freq, cplx> coeffs;
  for (const auto& t : terms) {
    if (t.m == Freq{0, 0, 0}) {
      coeffs[t.m] += t.amplitude;
    } else {
      coeffs[t.m] += 0.5 * t.amplitude;
      coeffs[negate(t.m)] += 0.5 * t.amplitude;
    }
  }
  PotentialSpec v = fourier(d, std::move(coeffs));
  v.kind_ = "cosine_sum";
  return v;
}

cplx PotentialSpec::coefficient(const Freq& m) const {
  const auto it = coeffs_.find(m);
  return it == coeffs_.end() ? cplx(0.0) : it->second;
}

int PotentialSpec::max_frequency() const {
  int n = 0;
  for (const auto& [m, c] : coeffs_)
    for (int j = 0; j < d_; ++j) n = std::max(n, std::abs(m[j]));
  return n;
}

double PotentialSpec::sup_bound() const {
  double s = 0.0;
  for (const auto& [m, c] : coeffs_) s += std::abs(c);
  return s;
}

double PotentialSpec::evaluate(const Point& x) const {
  cplx s = 0.0;
  for (const auto& [m, c] : coeffs_) {
    double phase = 0.0;
    for (int j = 0; j < d_; ++j) phase += m[j] * x[j];
    s += c * std::polar(1.0, kTwoPi * phase);
  }
  if (std::abs(s.imag()) > 1e-12 * std::max(1.0, sup_bound()))
    throw NumericalError("potential evaluated to a complex value");
  return s.real();
}

PerturbationSpec::PerturbationSpec(int d, std::string kind, std::vector<Bump> bumps)
    : d_(d), kind_(std::move(kind)), bumps_(std::move(bumps)) {
  check_dim(d);
  if (kind_ != "box" && kind_ != "gaussian" && kind_ != "sum" && kind_ != "signed_sum")
    throw InvalidArgument("unknown perturbation kind '" + kind_ + "'");
  if ((kind_ == "box" || kind_ == "gaussian") && bumps_.size() != 1)
    throw InvalidArgument("perturbation kind '" + kind_ + "' takes exactly one component");
  for (const auto& b : bumps_) {
    if (!std::isfinite(b.amplitude)) throw InvalidArgument("perturbation amplitude must be finite");
    for (int j = 0; j < d; ++j)
      if (!(b.widths[j] > 0.0)) throw InvalidArgument("perturbation widths must be positive");
    if (kind_ == "box" && b.shape != BumpShape::box) throw InvalidArgument("box perturbation needs a box component");
    if (kind_ == "gaussian" && b.shape != BumpShape::gaussian)
      throw InvalidArgument("gaussian perturbation needs a gaussian component");
    if (b.amplitude < 0.0 && kind_ != "signed_sum")
      throw InvalidArgument("negative amplitude requires kind signed_sum");
  }
  definite_ = std::all_of(bumps_.begin(), bumps_.end(), [](const Bump& b) { return b.amplitude >= 0.0; });
}

PerturbationSpec PerturbationSpec::box(int d, const Point& center, const Point& half_widths, double amplitude) {
  return PerturbationSpec(d, amplitude < 0 ? "signed_sum" : "box",
                          {Bump{BumpShape::box, center, half_widths, amplitude}});
}

PerturbationSpec PerturbationSpec::gaussian(int d, const Point& center, double sigma, double amplitude) {
  return PerturbationSpec(d, amplitude < 0 ? "signed_sum" : "gaussian",
                          {Bump{BumpShape::gaussian, center, {sigma, sigma, sigma}, amplitude}});
}

double PerturbationSpec::evaluate(const Point& x) const {
  double s = 0.0;
  for (const auto& b : bumps_) s += bump_value(b, d_, x);
  return s;
}

double PerturbationSpec::positive_part(const Point& x) const { return std::max(evaluate(x), 0.0); }

double PerturbationSpec::negative_part(const Point& x) const { return std::max(-evaluate(x), 0.0); }

PerturbationIntegrals PerturbationSpec::integrals() const {
  PerturbationIntegrals out;
  for (const auto& b : bumps_) {
    const double m = bump_mass(b, d_);
    out.integral += b.amplitude * m;
    out.abs_integral += std::abs(b.amplitude) * m;
  }
  bool exact = true;
  for (std::size_t i = 0; i < bumps_.size() && exact; ++i)
    for (std::size_t k = i + 1; k < bumps_.size() && exact; ++k)
      if (bumps_[i].amplitude * bumps_[k].amplitude < 0.0 && overlap(bumps_[i], bumps_[k], d_)) exact = false;
  if (exact) return out;

  // Mixed-sign overlap: integrate |W| on panels aligned with every box face.
  Point lo{}, hi{};
  support_box(lo, hi);
  std::array<Rule1d, 3> rules;
  for (int j = 0; j < d_; ++j) {
    std::vector<double> faces;
    for (const auto& b : bumps_)
      if (b.shape == BumpShape::box) {
        faces.push_back(b.center[j] - b.widths[j]);
        faces.push_back(b.center[j] + b.widths[j]);
      }
    rules[j] = composite_gauss_legendre(panel_breaks(lo[j], hi[j], faces, (hi[j] - lo[j]) / 24.0), 8);
  }
  for (int j = d_; j < 3; ++j) rules[j] = Rule1d{{0.0}, {1.0}};
  double acc = 0.0;
  Point x{};
  for (std::size_t a = 0; a < rules[0].size(); ++a) {
    x[0] = rules[0].nodes[a];
    for (std::size_t b = 0; b < rules[1].size(); ++b) {
      x[1] = rules[1].nodes[b];
      for (std::size_t c = 0; c < rules[2].size(); ++c) {
        x[2] = rules[2].nodes[c];
        acc += rules[0].weights[a] * rules[1].weights[b] * rules[2].weights[c] * std::abs(evaluate(x));
      }
    }
  }
  out.abs_integral = acc;
  out.abs_integral_exact = false;
  return out;
}

void PerturbationSpec::support_box(Point& lo, Point& hi) const {
  lo = {0, 0, 0};
  hi = {0, 0, 0};
  bool first = true;
  for (const auto& b : bumps_) {
    Point l{}, h{};
    bump_extent(b, d_, kGaussMassCut, l, h);
    for (int j = 0; j < d_; ++j) {
      lo[j] = first ? l[j] : std::min(lo[j], l[j]);
      hi[j] = first ? h[j] : std::max(hi[j], h[j]);
    }
    first = false;
  }
}

void PerturbationSpec::floor_box(double floor, Point& lo, Point& hi) const {
  lo = {0, 0, 0};
  hi = {0, 0, 0};
  bool first = true;
  for (const auto& b : bumps_) {
    if (std::abs(b.amplitude) <= floor) continue;
    // Worst case all components add up, so each one is cut where it drops below floor / count.
    const double level = floor / static_cast<double>(bumps_.size());
    const double ratio = std::abs(b.amplitude) / level;
    const double cut = ratio > 1.0 ? std::sqrt(2.0 * std::log(ratio)) : 0.0;
    Point l{}, h{};
    bump_extent(b, d_, cut, l, h);
    for (int j = 0; j < d_; ++j) {
      lo[j] = first ? l[j] : std::min(lo[j], l[j]);
      hi[j] = first ? h[j] : std::max(hi[j], h[j]);
    }
    first = false;
  }
}

PerturbationSpec PerturbationSpec::negated() const { return scaled(-1.0); }

PerturbationSpec PerturbationSpec::scaled(double factor) const {
  std::vector<Bump> bs = bumps_;
  for (auto& b : bs) b.amplitude *= factor;
  const bool nonneg = std::all_of(bs.begin(), bs.end(), [](const Bump& b) { return b.amplitude >= 0.0; });
  std::string kind = kind_;
  if (!nonneg) kind = "signed_sum";
  else if (kind_ == "signed_sum") kind = "sum";
  return PerturbationSpec(d_, kind, std::move(bs));
}

MomentumGrid::MomentumGrid(int d, std::array<int, 3> counts) : d_(d), counts_(counts) {
  check_dim(d);
  for (int j = d; j < 3; ++j) counts_[j] = 1;
  for (int j = 0; j < d; ++j) {
    if (counts_[j] < 1) throw InvalidArgument("momentum grid counts must be positive");
    total_ *= static_cast<std::size_t>(counts_[j]);
  }
}

MomentumGrid::MomentumGrid(int d, int n) : MomentumGrid(d, std::array<int, 3>{n, n, n}) {}

double MomentumGrid::step(int axis) const { return kTwoPi / counts_[axis]; }

std::array<int, 3> MomentumGrid::multi_index(std::size_t index) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int j = d_ - 1; j >= 0; --j) {
    idx[j] = static_cast<int>(index % counts_[j]);
    index /= counts_[j];
  }
  return idx;
}

std::size_t MomentumGrid::flat_index(const std::array<int, 3>& idx) const {
  std::size_t f = 0;
  for (int j = 0; j < d_; ++j) {
    const int n = counts_[j];
    f = f * n + static_cast<std::size_t>(((idx[j] % n) + n) % n);
  }
  return f;
}

Point MomentumGrid::point(std::size_t index) const {
  const auto idx = multi_index(index);
  Point p{};
  for (int j = 0; j < d_; ++j) p[j] = -std::numbers::pi + step(j) * idx[j];
  return p;
}

}  // namespace vbl
