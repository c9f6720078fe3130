#include "vbl/edge_model.hpp"

#include <algorithm>
#include <cmath>

#include "vbl/errors.hpp"
#include "vbl/parallel.hpp"
#include "vbl/quadrature.hpp"

namespace vbl {

SpatialQuadrature perturbation_quadrature(const PerturbationSpec& W, double box_scale) {
  const int d = W.dimension();
  Point lo{}, hi{};
  W.support_box(lo, hi);
  std::array<Rule1d, 3> rules;
  for (int j = 0; j < d; ++j) {
    const double c = 0.5 * (lo[j] + hi[j]), half = 0.5 * (hi[j] - lo[j]) * box_scale;
    const double a = c - half, b = c + half;
    std::vector<double> forced;
    for (double t = std::ceil(a); t < b; t += 1.0) forced.push_back(t);
    for (const auto& bump : W.bumps())
      if (bump.shape == BumpShape::box) {
        forced.push_back(bump.center[j] - bump.widths[j]);
        forced.push_back(bump.center[j] + bump.widths[j]);
      }
    rules[j] = composite_gauss_legendre(panel_breaks(a, b, forced, 0.5), 8);
  }
  for (int j = d; j < 3; ++j) rules[j] = Rule1d{{0.0}, {1.0}};
  SpatialQuadrature q;
  q.d = d;
  for (std::size_t a = 0; a < rules[0].size(); ++a)
    for (std::size_t b = 0; b < rules[1].size(); ++b)
      for (std::size_t c = 0; c < rules[2].size(); ++c) {
        const Point x{rules[0].nodes[a], rules[1].nodes[b], rules[2].nodes[c]};
        if (W.evaluate(x) == 0.0) continue;
        q.nodes.push_back(x);
        q.weights.push_back(rules[0].weights[a] * rules[1].weights[b] * rules[2].weights[c]);
      }
  return q;
}

WeightedBloch weighted_bloch(const GapEdge& edge, int k, const PerturbationSpec& W, const SpatialQuadrature& quad) {
  if (!W.definite()) throw InvalidArgument("weighted Bloch functions need W >= 0; use the indefinite splitting");
  if (k < 0 || k >= static_cast<int>(edge.extrema.size())) throw InvalidArgument("extremum index out of range");
  const auto& bloch = edge.extrema[k].bloch;
  if (!bloch) throw InvalidArgument("extremum has no Bloch function attached");
  WeightedBloch v;
  v.extremum = k;
  v.values.resize(quad.size());
  parallel_for(quad.size(), [&](std::size_t i) {
    v.values[i] = std::sqrt(W.evaluate(quad.nodes[i])) * bloch->evaluate(quad.nodes[i]);
  });
  for (std::size_t i = 0; i < quad.size(); ++i) v.norm2 += quad.weights[i] * std::norm(v.values[i]);
  return v;
}

NonDegenerateEdgeModel gram_and_nu(const GapEdge& edge, const std::vector<WeightedBloch>& vs,
                                   const SpatialQuadrature& quad) {
  const int n = static_cast<int>(vs.size());
  if (n == 0) throw InvalidArgument("gram_and_nu needs at least one weighted Bloch function");
  NonDegenerateEdgeModel m;
  for (const auto& v : vs) {
    m.masses.push_back(edge.extrema[v.extremum].mass);
    m.norms2.push_back(v.norm2);
  }
  m.gram.resize(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      cplx ip = 0.0;  // (v_l, v_k) = int v_l conj(v_k)
      for (std::size_t i = 0; i < quad.size(); ++i) ip += quad.weights[i] * vs[l].values[i] * std::conj(vs[k].values[i]);
      m.gram(k, l) = std::pow(m.masses[k] * m.masses[l], 0.25) * ip;
    }
  m.gram = 0.5 * (m.gram + m.gram.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.gram);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() <= 1e-12 * std::max(1.0, ev.maxCoeff()))
    throw NumericalError("weighted Bloch functions numerically dependent - refine grid");
  m.nu = ev.reverse();
  m.gram_vectors = es.eigenvectors().rowwise().reverse();
  m.condition_number = ev.maxCoeff() / ev.minCoeff();
  for (int j = 0; j < n; ++j) {
    std::vector<cplx> g(quad.size(), 0.0);
    for (int l = 0; l < n; ++l) {
      const cplx c = m.gram_vectors(l, j) * std::pow(m.masses[l], 0.25) / std::sqrt(m.nu[j]);
      for (std::size_t i = 0; i < quad.size(); ++i) g[i] += c * vs[l].values[i];
    }
    m.g.push_back(std::move(g));
  }
  return m;
}

NonDegenerateEdgeModel build_edge_model(const GapEdge& edge, const PerturbationSpec& W,
                                        const SpatialQuadrature& quad) {
  if (!edge.all_simple()) throw NumericalError("edge is not simple; asymptotic laws do not apply");
  if (!edge.all_morse()) throw NumericalError("edge is degenerate; use the Morse-Bott model");
  std::vector<WeightedBloch> vs;
  for (int k = 0; k < static_cast<int>(edge.extrema.size()); ++k) vs.push_back(weighted_bloch(edge, k, W, quad));
  return gram_and_nu(edge, vs, quad);
}

double box_doubling_error(const GapEdge& edge, const PerturbationSpec& W) {
  const auto q1 = perturbation_quadrature(W, 1.0);
  const auto q2 = perturbation_quadrature(W, 2.0);
  double err = 0.0;
  for (int k = 0; k < static_cast<int>(edge.extrema.size()); ++k) {
    const double a = weighted_bloch(edge, k, W, q1).norm2;
    const double b = weighted_bloch(edge, k, W, q2).norm2;
    err = std::max(err, std::abs(a - b) / b);
  }
  return err;
}

namespace {

DegenerateEdgeModel degenerate_once(const SyntheticDispersion& sd, const PerturbationSpec& W, int n_samples,
                                    const DegenerateOptions& opt) {
  const int d = sd.dimension();
  const GapEdge edge = synthetic_edge(sd, n_samples);
  if (!edge.degenerate) throw InvalidArgument("degenerate_gw needs a Morse-Bott extremal manifold");
  DegenerateEdgeModel m;
  m.d = d;
  m.codim = edge.codim;
  m.cell = opt.spacing;
  m.n_samples = n_samples;

  Point lo{}, hi{};
  W.floor_box(opt.w_floor, lo, hi);
  std::array<int, 3> i0{0, 0, 0}, i1{0, 0, 0};
  for (int j = 0; j < d; ++j) {
    i0[j] = static_cast<int>(std::floor(lo[j] / opt.spacing));
    i1[j] = static_cast<int>(std::ceil(hi[j] / opt.spacing));
  }
  std::vector<double> wvals;
  for (int a = i0[0]; a <= i1[0]; ++a)
    for (int b = i0[1]; b <= i1[1]; ++b)
      for (int c = i0[2]; c <= i1[2]; ++c) {
        const Point x{a * opt.spacing, b * opt.spacing, c * opt.spacing};
        const double w = W.evaluate(x);
        if (w > opt.w_floor) {
          m.points.push_back(x);
          wvals.push_back(w);
        }
      }
  const double vol = std::pow(opt.spacing, d);
  const auto np = static_cast<Eigen::Index>(m.points.size());
  const auto nq = static_cast<Eigen::Index>(edge.samples.size());
  if (np == 0) {
    m.nu = Eigen::VectorXd::Zero(std::min<Eigen::Index>(nq, 1));
    return m;
  }

  // G = U C U^*, U(x, i) = sqrt(vol W(x)) exp(i k_i.x), C = diag(w_i sqrt(m_i)); the nonzero
  // spectrum equals that of C^(1/2) U^* U C^(1/2).
  Eigen::MatrixXcd u(np, nq);
  parallel_for(static_cast<std::size_t>(np), [&](std::size_t xi) {
    const Point& x = m.points[xi];
    const double amp = std::sqrt(vol * wvals[xi]);
    for (Eigen::Index i = 0; i < nq; ++i) {
      double ph = 0.0;
      for (int j = 0; j < d; ++j) ph += edge.samples[i].k[j] * x[j];
      u(static_cast<Eigen::Index>(xi), i) = std::polar(amp, ph);
    }
  });
  Eigen::VectorXd c(nq);
  double csum = 0.0;
  for (Eigen::Index i = 0; i < nq; ++i) {
    c[i] = edge.samples[i].weight * std::sqrt(edge.samples[i].mass);
    csum += c[i];
  }
  const Eigen::VectorXd sc = c.cwiseSqrt();
  Eigen::MatrixXcd small = sc.asDiagonal() * (u.adjoint() * u) * sc.asDiagonal();
  small = 0.5 * (small + small.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(small);
  m.nu = es.eigenvalues().reverse();
  m.trace_sum = m.nu.sum();
  for (std::size_t xi = 0; xi < wvals.size(); ++xi) m.trace_diagonal += vol * wvals[xi] * csum;
  const int keep = std::min<int>(opt.n_functions, static_cast<int>(nq));
  for (int j = 0; j < keep; ++j) {
    const Eigen::Index col = nq - 1 - j;
    if (!(m.nu[j] > 0)) break;
    const Eigen::VectorXcd gv = u * (sc.asDiagonal() * es.eigenvectors().col(col)) / std::sqrt(m.nu[j] * vol);
    m.g.emplace_back(gv.data(), gv.data() + gv.size());
  }
  return m;
}

}  // namespace

DegenerateEdgeModel degenerate_gw(const SyntheticDispersion& sd, const PerturbationSpec& W, int n_samples,
                                  const DegenerateOptions& opt) {
  if (!W.definite()) throw InvalidArgument("degenerate_gw needs W >= 0");
  if (sd.codimension() < 1 || sd.codimension() > 2)
    throw InvalidArgument("degenerate model needs an extremal manifold of codimension 1 or 2");
  DegenerateEdgeModel m = degenerate_once(sd, W, n_samples, opt);
  if (m.nu.size() == 0 || m.nu[0] == 0.0) return m;
  const DegenerateEdgeModel fine = degenerate_once(sd, W, 2 * n_samples, opt);
  if (std::abs(fine.nu[0] - m.nu[0]) > opt.refine_tol * m.nu[0])
    throw NumericalError("manifold quadrature not converged: nu_1 moved by " +
                         std::to_string(std::abs(fine.nu[0] - m.nu[0]) / m.nu[0]) + " under sample doubling");
  return m;
}

}  // namespace vbl
