#include "vbl/oracle.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "vbl/errors.hpp"

namespace vbl {

SpMat perturbed_matrix(const TruncatedH0& h0, const Eigen::VectorXd& w, double gamma) {
  if (w.size() != h0.size()) throw InvalidArgument("W samples do not match H0 nodes");
  SpMat a = h0.matrix;
  SpMat diag(a.rows(), a.cols());
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < w.size(); ++i)
    if (w[i] != 0.0) trip.emplace_back(i, i, gamma * w[i]);
  diag.setFromTriplets(trip.begin(), trip.end());
  a += diag;
  a.makeCompressed();
  return a;
}

void cluster_levels(const Eigen::VectorXd& values, double tol, std::vector<double>& levels, std::vector<int>& counts) {
  levels.clear();
  counts.clear();
  for (int i = 0; i < values.size(); ++i) {
    if (!levels.empty() && values[i] - values[i - 1] <= tol) {
      const int c = counts.back();
      levels.back() = (levels.back() * c + values[i]) / (c + 1);
      ++counts.back();
    } else {
      levels.push_back(values[i]);
      counts.push_back(1);
    }
  }
}

OracleResult gap_spectrum(const TruncatedH0& h0, const Eigen::VectorXd& w, double gamma, double lo, double hi) {
  if (!(hi > lo)) throw InvalidArgument("empty oracle window");
  if (lo < h0.lower_edge || hi > h0.upper_edge) throw InvalidArgument("oracle window leaves the verified gap");
  OracleResult r;
  r.gamma = gamma;
  r.window_lo = lo;
  r.window_hi = hi;
  r.geometry = h0.geometry;
  r.d = h0.d;
  r.h = h0.h;
  r.L = h0.L;
  r.channel = h0.channel;
  r.size = h0.size();
  const SpMat a = perturbed_matrix(h0, w, gamma);
  const EigenPairs ep = eigen_in_window(a, lo, hi);
  r.eigenvalues = ep.values;
  r.vectors = ep.vectors;
  r.residuals = ep.residuals;
  for (int i = 0; i < r.residuals.size(); ++i)
    if (r.residuals[i] > 1e-8)
      throw NumericalError("oracle eigen-residual " + std::to_string(r.residuals[i]) + " exceeds 1e-8");
  cluster_levels(r.eigenvalues, kClusterTol, r.levels, r.multiplicities);
  for (int& m : r.multiplicities) m *= h0.angular_multiplicity();
  const double touch = 1e-9 * std::max(1.0, std::abs(hi));
  for (double v : r.levels)
    if (std::abs(v - h0.upper_edge) < touch || std::abs(v - h0.lower_edge) < touch)
      r.warnings.push_back("eigenvalue touches a discrete band edge; hybridization with band states possible");
  return r;
}

DeviationTable eigenfunction_compare(const OracleResult& result, const Eigen::VectorXd& w, double edge,
                                     const Eigen::MatrixXcd& g, const std::vector<int>& group) {
  DeviationTable t;
  const int p = static_cast<int>(g.cols());
  if (static_cast<int>(group.size()) != p) throw InvalidArgument("one group label per model function");
  if (result.eigenvalues.size() < p) {
    t.counts_match = false;
    t.note = "oracle found " + std::to_string(result.eigenvalues.size()) + " eigenfunctions for " +
             std::to_string(p) + " model functions";
    return t;
  }
  // deepest first
  std::vector<int> order(static_cast<std::size_t>(result.eigenvalues.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    const double dx = std::abs(edge - result.eigenvalues[x]), dy = std::abs(edge - result.eigenvalues[y]);
    return dx > dy;
  });
  const Eigen::VectorXd root = w.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXcd a(g.rows(), p);
  for (int k = 0; k < p; ++k) {
    Eigen::VectorXd v = root.cwiseProduct(result.vectors.col(order[static_cast<std::size_t>(k)]));
    const double nv = v.norm();
    if (nv == 0.0) throw NumericalError("eigenfunction vanishes on the support of W");
    a.col(k) = (v / nv).cast<cplx>();
  }
  t.deviation.assign(static_cast<std::size_t>(p), 0.0);
  std::vector<bool> done(static_cast<std::size_t>(p), false);
  for (int k = 0; k < p; ++k) {
    if (done[static_cast<std::size_t>(k)]) continue;
    std::vector<int> members;
    for (int j = k; j < p; ++j)
      if (group[static_cast<std::size_t>(j)] == group[static_cast<std::size_t>(k)]) members.push_back(j);
    const int q = static_cast<int>(members.size());
    Eigen::MatrixXcd ag(g.rows(), q), gg(g.rows(), q);
    for (int j = 0; j < q; ++j) {
      ag.col(j) = a.col(members[static_cast<std::size_t>(j)]);
      gg.col(j) = g.col(members[static_cast<std::size_t>(j)]);
    }
    // unitary U minimizing ||ag U - gg||: polar factor of ag^* gg
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ag.adjoint() * gg, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::MatrixXcd u = svd.matrixU() * svd.matrixV().adjoint();
    const Eigen::MatrixXcd aligned = ag * u;
    for (int j = 0; j < q; ++j) {
      const auto idx = static_cast<std::size_t>(members[static_cast<std::size_t>(j)]);
      t.deviation[idx] = (aligned.col(j) - gg.col(j)).norm();
      done[idx] = true;
    }
  }
  return t;
}

Eigen::MatrixXcd model_functions_on_nodes(const TruncatedH0& h0, const GapEdge& edge,
                                          const NonDegenerateEdgeModel& model, const PerturbationSpec& W,
                                          std::vector<int>& group) {
  if (h0.geometry != H0Geometry::periodic_box) throw InvalidArgument("model functions need the periodic box");
  const int n_ext = static_cast<int>(edge.extrema.size());
  for (const auto& e : edge.extrema)
    if (!e.bloch) throw InvalidArgument("edge extrema carry no Bloch functions");
  const int n = h0.size();
  // v_l at the nodes in l2 coordinates
  Eigen::MatrixXcd v(n, n_ext);
  for (int i = 0; i < n; ++i) {
    const Point& x = h0.nodes[static_cast<std::size_t>(i)];
    const double wx = W.evaluate(x);
    const double s = wx > 0 ? std::sqrt(wx * h0.measure[i]) : 0.0;
    for (int l = 0; l < n_ext; ++l) v(i, l) = s == 0.0 ? cplx(0.0) : s * edge.extrema[static_cast<std::size_t>(l)].bloch->evaluate(x);
  }
  const int p = static_cast<int>(model.nu.size());
  Eigen::MatrixXcd g(n, p);
  group.assign(static_cast<std::size_t>(p), 0);
  int label = 0;
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXcd col = Eigen::VectorXcd::Zero(n);
    for (int l = 0; l < n_ext; ++l)
      col += model.gram_vectors(l, j) * std::pow(model.masses[static_cast<std::size_t>(l)], 0.25) * v.col(l);
    g.col(j) = col / col.norm();
    if (j > 0 && std::abs(model.nu[j] - model.nu[j - 1]) > 1e-9 * std::abs(model.nu[0])) ++label;
    group[static_cast<std::size_t>(j)] = label;
  }
  return g;
}

ConvergenceFit convergence_study(Law law, int d, int codim, double calibration, const std::vector<double>& gamma,
                                 const std::vector<double>& depth, double A_theory) {
  if (gamma.size() < 3 || gamma.size() != depth.size()) throw InvalidArgument("convergence study needs >= 3 points");
  ConvergenceFit f;
  f.gamma = gamma;
  f.A_theory = A_theory;
  const auto n = static_cast<Eigen::Index>(gamma.size());
  Eigen::MatrixXd m(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = law_function(law, d, codim, depth[static_cast<std::size_t>(i)], calibration) /
                     std::abs(gamma[static_cast<std::size_t>(i)]);
    f.ratio.push_back(r);
    m(i, 0) = 1.0;
    m(i, 1) = gamma[static_cast<std::size_t>(i)];
    y[i] = r;
  }
  const Eigen::Vector2d c = m.colPivHouseholderQr().solve(y);
  f.A_fit = c[0];
  f.B_fit = c[1];
  f.rel_error = std::abs(f.A_fit - A_theory) / std::abs(A_theory);
  // order of the remainder
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = std::abs(y[i] - A_theory);
    if (e <= 0) continue;
    const double lx = std::log(std::abs(gamma[static_cast<std::size_t>(i)])), ly = std::log(e);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++k;
  }
  f.order = k >= 2 ? (k * sxy - sx * sy) / (k * sxx - sx * sx) : 0.0;
  // ratios should approach A monotonically as |gamma| shrinks
  std::vector<std::size_t> idx(gamma.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return std::abs(gamma[a]) > std::abs(gamma[b]); });
  for (std::size_t i = 1; i < idx.size(); ++i)
    if (std::abs(f.ratio[idx[i]] - A_theory) > std::abs(f.ratio[idx[i - 1]] - A_theory)) f.monotone = false;
  return f;
}

}  // namespace vbl
