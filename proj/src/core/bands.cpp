#include "vbl/bands.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vbl/errors.hpp"
#include "vbl/parallel.hpp"
#include "vbl/quadrature.hpp"

namespace vbl {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double x) {
  // fold into [-pi, pi)
  double y = std::fmod(x + kPi, 2.0 * kPi);
  if (y < 0) y += 2.0 * kPi;
  return y - kPi;
}

double torus_distance(const Point& a, const Point& b, int d) {
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    const double t = wrap(a[j] - b[j]);
    s += t * t;
  }
  return std::sqrt(s);
}

Point offset(const Point& p, int j, double h) {
  Point q = p;
  q[j] += h;
  return q;
}

Point offset2(const Point& p, int j, double hj, int k, double hk) {
  Point q = p;
  q[j] += hj;
  q[k] += hk;
  return q;
}

Eigen::MatrixXd hessian_once(const std::function<double(const Point&)>& f, int d, const Point& p0, double h,
                             double f0) {
  Eigen::MatrixXd hs(d, d);
  for (int j = 0; j < d; ++j) {
    hs(j, j) = (f(offset(p0, j, h)) - 2.0 * f0 + f(offset(p0, j, -h))) / (h * h);
    for (int k = 0; k < j; ++k) {
      const double v = (f(offset2(p0, j, h, k, h)) - f(offset2(p0, j, h, k, -h)) - f(offset2(p0, j, -h, k, h)) +
                        f(offset2(p0, j, -h, k, -h))) /
                       (4.0 * h * h);
      hs(j, k) = hs(k, j) = v;
    }
  }
  return hs;
}

Eigen::VectorXd gradient_fd(const std::function<double(const Point&)>& f, int d, const Point& p0, double h) {
  Eigen::VectorXd g(d);
  for (int j = 0; j < d; ++j) g[j] = (f(offset(p0, j, h)) - f(offset(p0, j, -h))) / (2.0 * h);
  return g;
}

bool is_local_extremum(const BandStructure& bs, int band, std::size_t i, bool minimum) {
  const auto& grid = bs.grid;
  const int d = grid.dimension();
  const auto idx = grid.multi_index(i);
  const double v = bs.values(static_cast<Eigen::Index>(i), band);
  const int span = d == 1 ? 3 : (d == 2 ? 9 : 27);
  for (int s = 0; s < span; ++s) {
    std::array<int, 3> nb = idx;
    int r = s;
    bool centre = true;
    for (int j = 0; j < d; ++j) {
      const int o = r % 3 - 1;
      r /= 3;
      nb[j] += o;
      if (o != 0) centre = false;
    }
    if (centre) continue;
    const double w = bs.values(static_cast<Eigen::Index>(grid.flat_index(nb)), band);
    if (minimum ? (w < v) : (w > v)) return false;
  }
  return true;
}

Extremum refine_point(const Dispersion& disp, int band, Point p, bool minimum, double max_step,
                      const EdgeTolerances& tol) {
  const int d = disp.dimension();
  const double sign = minimum ? 1.0 : -1.0;
  auto f = [&](const Point& q) { return sign * disp.bands(q, band + 1)[band]; };
  double fp = f(p);
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd g = gradient_fd(f, d, p, 1e-5);
    const Eigen::MatrixXd hs = hessian_fd(f, d, p, tol.hessian_step);
    Eigen::VectorXd step;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hs);
    if (es.eigenvalues().minCoeff() > tol.morse_tol) {
      step = -es.eigenvectors() * (es.eigenvectors().transpose() * g).cwiseQuotient(es.eigenvalues());
    } else {
      const double scale = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
      step = -g / scale;
    }
    if (step.norm() > max_step) step *= max_step / step.norm();
    double accepted = 0.0;
    for (int k = 0; k < 40; ++k) {
      Point q = p;
      for (int j = 0; j < d; ++j) q[j] += step[j];
      const double fq = f(q);
      if (fq <= fp + 1e-13 * std::max(1.0, std::abs(fp))) {
        p = q;
        fp = fq;
        accepted = step.norm();
        break;
      }
      step *= 0.5;
      if (step.norm() < 0.1 * tol.refine_tol) break;
    }
    if (accepted < tol.refine_tol) break;
  }
  for (int j = 0; j < d; ++j) p[j] = wrap(p[j]);

  Extremum ex;
  ex.p = p;
  auto lam = [&](const Point& q) { return disp.bands(q, band + 1)[band]; };
  const Eigen::VectorXd here = disp.bands(p, band + 2);
  ex.value = here[band];
  ex.hessian = hessian_fd(lam, d, p, tol.hessian_step);
  ex.mass = 1.0 / std::abs(ex.hessian.determinant());
  if (minimum) {
    ex.simplicity_margin = here[band + 1] - here[band];
  } else if (band > 0) {
    ex.simplicity_margin = here[band] - here[band - 1];
  }
  ex.simple = ex.simplicity_margin >= tol.simple_tol;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ex.hessian);
  ex.morse = es.eigenvalues().cwiseAbs().minCoeff() > tol.morse_tol &&
             (minimum ? es.eigenvalues().minCoeff() > 0 : es.eigenvalues().maxCoeff() < 0);
  return ex;
}

}  // namespace

FiberDispersion::FiberDispersion(PotentialSpec V, int cutoff)
    : V_(std::move(V)), basis_(V_.dimension(), std::max(cutoff, V_.max_frequency())) {}

Eigen::VectorXd FiberDispersion::bands(const Point& p, int n_bands) const {
  return fiber_spectrum(p, V_, basis_, n_bands, false).eigenvalues;
}

BandStructure sweep_bands(const Dispersion& disp, const MomentumGrid& grid, int n_bands) {
  if (grid.dimension() != disp.dimension()) throw InvalidArgument("grid and dispersion dimensions differ");
  BandStructure bs{grid, n_bands, Eigen::MatrixXd(grid.size(), n_bands), 0};
  if (const auto* fd = dynamic_cast<const FiberDispersion*>(&disp)) bs.cutoff = fd->basis().cutoff();
  parallel_for(grid.size(), [&](std::size_t i) {
    bs.values.row(static_cast<Eigen::Index>(i)) = disp.bands(grid.point(i), n_bands).transpose();
  });
  return bs;
}

std::vector<SpectralGap> find_gaps(const BandStructure& bs, double gap_tol) {
  std::vector<SpectralGap> gaps;
  SpectralGap bottom;
  bottom.j = 0;
  bottom.upper = bs.values.col(0).minCoeff();
  gaps.push_back(bottom);
  for (int j = 1; j < bs.n_bands; ++j) {
    SpectralGap g;
    g.j = j;
    g.lower = bs.values.col(j - 1).maxCoeff();
    g.upper = bs.values.col(j).minCoeff();
    if (g.width() > gap_tol) gaps.push_back(g);
  }
  return gaps;
}

bool GapEdge::all_simple() const {
  return std::all_of(extrema.begin(), extrema.end(), [](const Extremum& e) { return e.simple; });
}

bool GapEdge::all_morse() const {
  return std::all_of(extrema.begin(), extrema.end(), [](const Extremum& e) { return e.morse; });
}

Eigen::MatrixXd hessian_fd(const std::function<double(const Point&)>& f, int d, const Point& p0, double h) {
  const double f0 = f(p0);
  const Eigen::MatrixXd h1 = hessian_once(f, d, p0, h, f0);
  const Eigen::MatrixXd h2 = hessian_once(f, d, p0, 0.5 * h, f0);
  Eigen::MatrixXd r = (4.0 * h2 - h1) / 3.0;
  return 0.5 * (r + r.transpose());
}

GapEdge refine_edge(const Dispersion& disp, const BandStructure& bs, const SpectralGap& gap, EdgeSide side,
                    const EdgeTolerances& tol) {
  if (side == EdgeSide::lower && gap.semi_infinite())
    throw InvalidArgument("the semi-infinite gap has no lower edge");
  const int d = disp.dimension();
  GapEdge edge;
  edge.side = side;
  edge.d = d;
  edge.band = side == EdgeSide::upper ? gap.j : gap.j - 1;
  edge.manifold = "point";
  edge.codim = d;
  if (edge.band + 1 >= bs.n_bands && side == EdgeSide::upper)
    throw InvalidArgument("band sweep needs one band above the edge band for the simplicity margin");
  const bool minimum = side == EdgeSide::upper;
  const auto& grid = bs.grid;

  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (is_local_extremum(bs, edge.band, i, minimum)) cand.push_back(i);
  // best coarse values first so clustering keeps the representative nearest the extremum
  std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
    const double va = bs.values(static_cast<Eigen::Index>(a), edge.band);
    const double vb = bs.values(static_cast<Eigen::Index>(b), edge.band);
    return minimum ? va < vb : va > vb;
  });
  double hmax = 0.0;
  for (int j = 0; j < d; ++j) hmax = std::max(hmax, grid.step(j));
  std::vector<Point> seeds;
  for (std::size_t i : cand) {
    const Point p = grid.point(i);
    const bool near = std::any_of(seeds.begin(), seeds.end(),
                                  [&](const Point& s) { return torus_distance(p, s, d) <= 2.0 * hmax + 1e-12; });
    if (!near) seeds.push_back(p);
  }

  std::vector<Extremum> refined(seeds.size());
  parallel_for(seeds.size(),
               [&](std::size_t i) { refined[i] = refine_point(disp, edge.band, seeds[i], minimum, hmax, tol); });

  double best = minimum ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  for (const auto& e : refined) best = minimum ? std::min(best, e.value) : std::max(best, e.value);
  for (auto& e : refined) {
    if (std::abs(e.value - best) > tol.refine_tol) continue;
    const bool dup = std::any_of(edge.extrema.begin(), edge.extrema.end(),
                                 [&](const Extremum& o) { return torus_distance(o.p, e.p, d) < 1e-6; });
    if (!dup) edge.extrema.push_back(std::move(e));
  }
  std::sort(edge.extrema.begin(), edge.extrema.end(), [](const Extremum& a, const Extremum& b) { return a.p < b.p; });
  edge.value = best;
  edge.degenerate = !edge.all_morse();
  return edge;
}

void attach_bloch(GapEdge& edge, const FiberDispersion& disp, const CellGrid& grid) {
  for (auto& e : edge.extrema) {
    const auto fs = fiber_spectrum(e.p, disp.potential(), disp.basis(), edge.band + 1, true);
    e.bloch.emplace(fs, disp.basis(), edge.band, grid);
  }
}

SpectralGap refine_gap(const Dispersion& disp, const BandStructure& bs, const SpectralGap& gap,
                       const EdgeTolerances& tol) {
  SpectralGap out = gap;
  out.upper = refine_edge(disp, bs, gap, EdgeSide::upper, tol).value;
  if (!gap.semi_infinite()) out.lower = refine_edge(disp, bs, gap, EdgeSide::lower, tol).value;
  return out;
}

SyntheticDispersion SyntheticDispersion::radial_well(int d, double k0, double alpha, double c) {
  if (d < 1 || d > 3) throw InvalidArgument("synthetic dimension must be 1, 2 or 3");
  if (k0 < 0 || !(alpha > 0)) throw InvalidArgument("radial well needs k0 >= 0 and alpha > 0");
  SyntheticDispersion s;
  s.name_ = "radial_well";
  s.d_ = d;
  s.k0_ = k0;
  s.alpha_ = alpha;
  s.c_ = c;
  if (k0 == 0.0) {
    s.codim_ = d;
    s.manifold_ = "point";
  } else {
    if (d == 1) throw InvalidArgument("radial well with k0 > 0 needs d >= 2");
    s.codim_ = 1;
    s.manifold_ = d == 2 ? "circle" : "sphere";
  }
  return s;
}

SyntheticDispersion SyntheticDispersion::circle_well_3d(double r) {
  if (!(r > 0)) throw InvalidArgument("circle well radius must be positive");
  SyntheticDispersion s;
  s.name_ = "circle_well_3d";
  s.d_ = 3;
  s.k0_ = r;
  s.alpha_ = 1.0;
  s.c_ = 0.0;
  s.codim_ = 2;
  s.manifold_ = "circle";
  return s;
}

double SyntheticDispersion::symbol(const Point& k) const {
  if (name_ == "circle_well_3d") {
    const double t = k[0] * k[0] + k[1] * k[1] - k0_ * k0_;
    return t * t + k[2] * k[2];
  }
  double r2 = 0.0;
  for (int j = 0; j < d_; ++j) r2 += k[j] * k[j];
  const double t = std::sqrt(r2) - k0_;
  return alpha_ * t * t + c_;
}

GapEdge synthetic_edge(const SyntheticDispersion& sd, int n_samples, const EdgeTolerances& tol) {
  GapEdge edge;
  edge.side = EdgeSide::upper;
  edge.d = sd.dimension();
  edge.value = sd.minimum();
  edge.codim = sd.codimension();
  edge.manifold_dim = sd.dimension() - sd.codimension();
  edge.manifold = sd.manifold();
  const double r = sd.radius();

  if (sd.manifold() == "point") {
    Extremum e;
    e.value = sd.minimum();
    e.hessian = 2.0 * sd.alpha() * Eigen::MatrixXd::Identity(edge.d, edge.d);
    e.mass = 1.0 / e.hessian.determinant();
    e.morse = 2.0 * sd.alpha() > tol.morse_tol;
    edge.extrema.push_back(e);
    edge.degenerate = false;
    return edge;
  }
  if (n_samples < 4) throw InvalidArgument("synthetic_edge needs at least 4 samples");
  edge.degenerate = true;
  if (sd.name() == "circle_well_3d") {
    Eigen::MatrixXd nh(2, 2);
    nh << 8.0 * r * r, 0.0, 0.0, 2.0;
    for (int i = 0; i < n_samples; ++i) {
      const double th = 2.0 * kPi * i / n_samples;
      edge.samples.push_back({{r * std::cos(th), r * std::sin(th), 0.0}, 2.0 * kPi * r / n_samples, nh,
                              1.0 / nh.determinant()});
    }
    return edge;
  }
  const Eigen::MatrixXd nh = Eigen::MatrixXd::Constant(1, 1, 2.0 * sd.alpha());
  const double mass = 1.0 / (2.0 * sd.alpha());
  if (edge.d == 2) {
    for (int i = 0; i < n_samples; ++i) {
      const double th = 2.0 * kPi * i / n_samples;
      edge.samples.push_back({{r * std::cos(th), r * std::sin(th), 0.0}, 2.0 * kPi * r / n_samples, nh, mass});
    }
  } else {
    const Rule1d gl = gauss_legendre(std::max(2, n_samples / 2));
    for (std::size_t a = 0; a < gl.size(); ++a) {
      const double ct = gl.nodes[a], st = std::sqrt(1.0 - ct * ct);
      for (int i = 0; i < n_samples; ++i) {
        const double ph = 2.0 * kPi * i / n_samples;
        edge.samples.push_back({{r * st * std::cos(ph), r * st * std::sin(ph), r * ct},
                                r * r * gl.weights[a] * 2.0 * kPi / n_samples, nh, mass});
      }
    }
  }
  return edge;
}

}  // namespace vbl
