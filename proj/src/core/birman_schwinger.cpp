#include "vbl/birman_schwinger.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <limits>
#include <map>

#include "vbl/errors.hpp"
#include "vbl/parallel.hpp"

namespace vbl {

namespace {

bool is_definite(const Eigen::VectorXd& w) { return (w.array() >= 0.0).all() || (w.array() <= 0.0).all(); }

// Resolvent block [(H - lambda)^-1]_SS as the inverse of the Schur complement
//   M = (H - lambda)_SS - H_SE (H_EE - lambda)^-1 H_ES
// of the exterior E. Needs one exterior solve per support node coupled to E. The shift and all
// solves run in extended precision so that levels far shallower than eps ||H|| stay resolved in
// lambda. Column j of the block extends to the full solution u = (u_S, -sum_c y_c u_S[c]) whose
// residual is bounded by ||M u_S - e_j|| + sum_c |u_S[c]| ||r_c||, with r_c the residual of the
// exterior solve y_c. Every column must pass the same acceptance as a direct solve (relative residual
// <= 1e-10, or backward error <= 1e-12 with ||u|| <= 2 / dist(lambda, spec H)). Returns false
// otherwise, or when a factorization fails.
bool resolvent_block_schur(const TruncatedH0& h0, const std::vector<int>& support, double lambda,
                           Eigen::MatrixXd& g) {
  using Real = long double;
  using VecX = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  using MatX = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using SpX = Eigen::SparseMatrix<Real>;
  const SpMat& h = h0.matrix;
  const int n = h0.size();
  const Real shift = lambda;
  std::vector<int> pos(static_cast<std::size_t>(n), -1);  // index in S, or -2 - index in E
  for (std::size_t i = 0; i < support.size(); ++i) pos[static_cast<std::size_t>(support[i])] = static_cast<int>(i);
  // cyclic order from just past the support keeps a periodic chain exterior tridiagonal
  const int start = support.empty() ? 0 : (*std::max_element(support.begin(), support.end()) + 1) % n;
  int ne = 0;
  for (int t = 0; t < n; ++t) {
    const auto i = static_cast<std::size_t>((start + t) % n);
    if (pos[i] == -1) pos[i] = -2 - ne++;
  }
  const auto k = static_cast<Eigen::Index>(support.size());
  MatX m = MatX::Zero(k, k);
  std::vector<Eigen::Triplet<Real>> ee;
  std::map<int, VecX> coupling;  // support index -> column of H_ES
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(n);
  for (int col = 0; col < h.outerSize(); ++col)
    for (SpMat::InnerIterator it(h, col); it; ++it) {
      row_sums[it.row()] += std::abs(it.value());
      const int pr = pos[static_cast<std::size_t>(it.row())], pc = pos[static_cast<std::size_t>(col)];
      if (pr >= 0 && pc >= 0) {
        m(pr, pc) += it.value();
      } else if (pr < 0 && pc < 0) {
        ee.emplace_back(-2 - pr, -2 - pc, it.value());
      } else if (pr < 0 && pc >= 0) {
        auto [c, fresh] = coupling.try_emplace(pc, VecX());
        if (fresh) c->second = VecX::Zero(ne);
        c->second[-2 - pr] = it.value();
      }
    }
  const double norm_a = row_sums.maxCoeff() + std::abs(lambda);
  const double dist = std::min(lambda - h0.lower_edge, h0.upper_edge - lambda);
  m.diagonal().array() -= shift;
  std::vector<std::pair<int, VecX>> cols(coupling.begin(), coupling.end());
  std::vector<VecX> y(cols.size());
  std::vector<double> y_norm(cols.size()), r_norm(cols.size());
  if (!cols.empty()) {
    bool tridiagonal = true;
    for (const auto& t : ee) tridiagonal = tridiagonal && std::abs(t.row() - t.col()) <= 1;
    // tridiagonal case: unpivoted L D L^T; the residual test below guards its stability
    VecX tri_a, tri_b, tri_d, tri_l;
    SpX hee;
    Eigen::SimplicialLDLT<SpX> fac;
    if (tridiagonal) {
      tri_a = VecX::Constant(ne, -shift);
      tri_b = VecX::Zero(std::max(ne - 1, 0));
      for (const auto& t : ee) {
        if (t.row() == t.col()) tri_a[t.row()] += t.value();
        else if (t.row() == t.col() + 1) tri_b[t.col()] += t.value();
      }
      tri_d = tri_a;
      tri_l = VecX::Zero(tri_b.size());
      for (int i = 0; i < ne; ++i) {
        if (i > 0) tri_d[i] -= tri_l[i - 1] * tri_b[i - 1];
        if (tri_d[i] == 0) return false;
        if (i + 1 < ne) tri_l[i] = tri_b[i] / tri_d[i];
      }
    } else {
      for (int i = 0; i < ne; ++i) ee.emplace_back(i, i, -shift);
      hee.resize(ne, ne);
      hee.setFromTriplets(ee.begin(), ee.end());
      fac.compute(hee);
      if (fac.info() != Eigen::Success) return false;
    }
    auto exterior_solve = [&](const VecX& b) {
      if (!tridiagonal) return VecX(fac.solve(b));
      VecX x = b;
      for (int i = 1; i < ne; ++i) x[i] -= tri_l[i - 1] * x[i - 1];
      x.array() /= tri_d.array();
      for (int i = ne - 2; i >= 0; --i) x[i] -= tri_l[i] * x[i + 1];
      return x;
    };
    auto exterior_residual = [&](const VecX& b, const VecX& x) {
      if (!tridiagonal) return VecX(b - hee * x);
      VecX r = b - tri_a.cwiseProduct(x);
      for (int i = 0; i + 1 < ne; ++i) {
        r[i] -= tri_b[i] * x[i + 1];
        r[i + 1] -= tri_b[i] * x[i];
      }
      return r;
    };
    parallel_for(cols.size(), [&](std::size_t j) {
      const VecX& b = cols[j].second;
      VecX x = exterior_solve(b);
      VecX r = exterior_residual(b, x);
      for (int step = 0; step < 2; ++step) {
        x += exterior_solve(r);
        r = exterior_residual(b, x);
      }
      y_norm[j] = static_cast<double>(x.norm());
      r_norm[j] = static_cast<double>(r.norm());
      y[j] = std::move(x);
    });
    // M -= H_SE (H_EE - lambda)^-1 H_ES; H_SE = H_ES^T for the symmetric H.
    for (std::size_t a = 0; a < cols.size(); ++a)
      for (std::size_t b = 0; b < cols.size(); ++b) m(cols[a].first, cols[b].first) -= cols[a].second.dot(y[b]);
  }
  const MatX msym = Real(0.5) * (m + m.transpose());
  const Eigen::PartialPivLU<MatX> lu(msym);
  const MatX gx = lu.solve(MatX::Identity(k, k));
  const MatX rs = msym * gx - MatX::Identity(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    double res = static_cast<double>(rs.col(j).norm());
    double u_norm = static_cast<double>(gx.col(j).norm());
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double uc = std::abs(static_cast<double>(gx(cols[c].first, j)));
      res += uc * r_norm[c];
      u_norm += uc * y_norm[c];
    }
    const double backward = res / (norm_a * u_norm + 1.0);
    if (!std::isfinite(res) || !(res <= 1e-10 || (backward <= 1e-12 && u_norm <= 2.0 / dist))) return false;
  }
  g = (Real(0.5) * (gx + gx.transpose())).template cast<double>();
  return g.allFinite();
}

// Columns of W^(1/2) R |W|^(1/2) restricted to `support` for the given signs and roots.
Eigen::MatrixXd bs_columns(const TruncatedH0& h0, const std::vector<int>& support, const Eigen::VectorXd& root,
                           const Eigen::VectorXd& sign, double lambda) {
  const auto k = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd x(k, k);
  if (k == 0) return x;
  Eigen::MatrixXd g;
  if (2 * k < h0.size() && resolvent_block_schur(h0, support, lambda, g)) {
    x = sign.cwiseProduct(root).asDiagonal() * g * root.asDiagonal();
    return x;
  }
  const ShiftedFactor fac(h0.matrix, lambda);
  parallel_for(support.size(), [&](std::size_t j) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(h0.size());
    rhs[support[j]] = root[static_cast<Eigen::Index>(j)];
    const Eigen::VectorXd u = fac.solve(rhs);
    for (Eigen::Index i = 0; i < k; ++i)
      x(i, static_cast<Eigen::Index>(j)) = sign[i] * root[i] * u[support[static_cast<std::size_t>(i)]];
  });
  return x;
}

void check_lambda(const TruncatedH0& h0, double lambda) {
  if (!(lambda > h0.lower_edge && lambda < h0.upper_edge))
    throw InvalidArgument("lambda " + std::to_string(lambda) + " is not inside the verified gap");
}

}  // namespace

BSOperator assemble_bs(const TruncatedH0& h0, const Eigen::VectorXd& w, double lambda, double w_floor) {
  if (w.size() != h0.size()) throw InvalidArgument("W samples do not match H0 nodes");
  check_lambda(h0, lambda);
  BSOperator op;
  op.lambda = lambda;
  for (int i = 0; i < w.size(); ++i)
    if (std::abs(w[i]) > w_floor) op.support.push_back(i);
  const auto k = static_cast<Eigen::Index>(op.support.size());
  op.root_abs.resize(k);
  op.sign.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double wi = w[op.support[static_cast<std::size_t>(i)]];
    op.root_abs[i] = std::sqrt(std::abs(wi));
    op.sign[i] = wi > 0 ? 1.0 : -1.0;
  }
  op.definite = is_definite(w);
  op.matrix = bs_columns(h0, op.support, op.root_abs, op.sign, lambda);
  if (op.definite && k > 0) {
    op.symmetry_defect = (op.matrix - op.matrix.transpose()).norm();
    op.matrix = (0.5 * (op.matrix + op.matrix.transpose())).eval();
  }
  return op;
}

void bs_spectrum(const BSOperator& x, double mu_floor, Eigen::VectorXd& positive, Eigen::VectorXd& negative) {
  if (!x.definite) throw InvalidArgument("branch spectra need a definite W");
  positive.resize(0);
  negative.resize(0);
  if (x.matrix.rows() == 0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.matrix, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  std::vector<double> pos, neg;
  for (Eigen::Index i = ev.size() - 1; i >= 0; --i)
    if (ev[i] > mu_floor) pos.push_back(ev[i]);
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] < -mu_floor) neg.push_back(ev[i]);
  positive = Eigen::Map<Eigen::VectorXd>(pos.data(), static_cast<Eigen::Index>(pos.size()));
  negative = Eigen::Map<Eigen::VectorXd>(neg.data(), static_cast<Eigen::Index>(neg.size()));
}

double BranchTable::mu_plus(int k, std::size_t i) const {
  return k < positive[i].size() ? positive[i][k] : 0.0;
}

double BranchTable::mu_minus(int k, std::size_t i) const {
  return k < negative[i].size() ? negative[i][k] : 0.0;
}

int BranchTable::max_positive_rank() const {
  int r = 0;
  for (const auto& p : positive) r = std::max(r, static_cast<int>(p.size()));
  return r;
}

double BranchTable::worst_monotonicity_violation() const {
  double worst = -std::numeric_limits<double>::infinity();
  const int r = max_positive_rank();
  for (int k = 0; k < r; ++k)
    for (std::size_t i = 0; i + 1 < lambdas.size(); ++i) worst = std::max(worst, mu_plus(k, i) - mu_plus(k, i + 1));
  return worst;
}

int BranchTable::domain_start(int k) const {
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    if (k < positive[i].size()) return static_cast<int>(i);
  return -1;
}

double BranchTable::max_negative_magnitude() const {
  double m = 0.0;
  for (const auto& n : negative)
    if (n.size()) m = std::max(m, std::abs(n[0]));
  return m;
}

BranchFit fit_branch_divergence(const BranchTable& table, double edge, int k, double dist_lo, double dist_hi,
                                bool logarithmic) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < table.lambdas.size(); ++i) {
    const double dist = std::abs(edge - table.lambdas[i]);
    const double mu = table.mu_plus(k, i);
    if (dist < dist_lo || dist > dist_hi || mu <= 0.0) continue;
    xs.push_back(logarithmic ? std::log(1.0 / dist) : std::log(dist));
    ys.push_back(logarithmic ? mu : std::log(mu));
  }
  BranchFit f;
  f.points = static_cast<int>(xs.size());
  if (f.points < 2) throw InvalidArgument("branch fit needs at least two samples in the distance range");
  const double n = f.points;
  double sx = 0, sy = 0;
  for (int i = 0; i < f.points; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < f.points; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

std::vector<double> edge_lambda_grid(double edge, EdgeSide side, double scale, int n) {
  if (!(scale > 0) || n < 1) throw InvalidArgument("edge grid needs a positive scale and n >= 1");
  std::vector<double> g;
  for (int i = 0; i < n; ++i) {
    const double off = 0.25 * scale * std::ldexp(1.0, -i);
    g.push_back(side == EdgeSide::upper ? edge - off : edge + off);
  }
  std::sort(g.begin(), g.end());
  return g;
}

BranchTable characteristic_branches(const TruncatedH0& h0, const Eigen::VectorXd& w, const std::vector<double>& lambdas,
                                    double w_floor) {
  if (!is_definite(w)) throw InvalidArgument("characteristic branches need a definite W");
  BranchTable t;
  t.lambdas = lambdas;
  std::sort(t.lambdas.begin(), t.lambdas.end());
  t.positive.resize(t.lambdas.size());
  t.negative.resize(t.lambdas.size());
  double scale = 0.0;
  std::vector<BSOperator> ops;
  for (double lam : t.lambdas) {
    ops.push_back(assemble_bs(h0, w, lam, w_floor));
    if (ops.back().matrix.size()) scale = std::max(scale, ops.back().matrix.cwiseAbs().maxCoeff());
  }
  t.mu_floor = 1e-12 * scale;
  for (std::size_t i = 0; i < ops.size(); ++i) bs_spectrum(ops[i], t.mu_floor, t.positive[i], t.negative[i]);
  return t;
}

PencilSolution solve_pencil(const TruncatedH0& h0, const Eigen::VectorXd& w, const BranchTable& table, double gamma,
                            double w_floor) {
  if (gamma == 0.0) throw InvalidArgument("solve_pencil needs gamma != 0");
  if (!is_definite(w)) throw InvalidArgument("solve_pencil needs a definite W");
  PencilSolution sol;
  sol.gamma = gamma;
  const double target = -1.0 / gamma;
  // For W >= 0 every eigenvalue of X grows with lambda, for W <= 0 every one decreases.
  const double dir = (w.array() >= 0.0).all() ? 1.0 : -1.0;
  std::map<double, Eigen::VectorXd> cache;  // lambda -> ranked eigenvalues (descending if target > 0)
  auto ranked = [&](double lam) -> const Eigen::VectorXd& {
    auto it = cache.find(lam);
    if (it != cache.end()) return it->second;
    ++sol.evaluations;
    const BSOperator op = assemble_bs(h0, w, lam, w_floor);
    Eigen::VectorXd ev;
    if (op.matrix.rows() > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.matrix, Eigen::EigenvaluesOnly);
      ev = es.eigenvalues();
      if (target > 0) ev.reverseInPlace();
    }
    return cache.emplace(lam, ev).first->second;
  };
  // f_k(lambda) = dir * (mu_k - target) is increasing for the matching rank order
  auto value = [&](int k, double lam) {
    const Eigen::VectorXd& ev = ranked(lam);
    const double mu = k < ev.size() ? ev[k] : 0.0;
    return target > 0 ? dir * (mu - target) : -dir * (mu - target);
  };
  // crossings of rank k: count of eigenvalues beyond the target
  auto beyond = [&](double lam) {
    const Eigen::VectorXd& ev = ranked(lam);
    int c = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (target > 0 ? ev[i] >= target : ev[i] <= target) ++c;
    return c;
  };

  const double hi_edge = h0.upper_edge, lo_edge = h0.lower_edge;
  const double wmax = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
  const double lo_limit = std::isfinite(lo_edge) ? lo_edge : hi_edge - std::abs(gamma) * wmax - 1.0;
  // Roots closer to an edge than this are not resolved by the double-precision factorization.
  const double guard_hi = 1e-12 * std::max(1.0, std::abs(hi_edge));
  const double guard_lo = std::isfinite(lo_edge) ? 1e-12 * std::max(1.0, std::abs(lo_edge)) : 0.0;
  sol.expected = count_in_window(perturbed_matrix(h0, w, gamma), lo_limit + guard_lo, hi_edge - guard_hi);

  std::vector<double> samples;
  for (double l : table.lambdas)
    if (l > lo_limit + guard_lo && l < hi_edge - guard_hi) samples.push_back(l);
  const double span = hi_edge - lo_limit;
  samples.push_back(lo_limit + (std::isfinite(lo_edge) ? 0.25 : 1e-3) * span);
  samples.push_back(hi_edge - 0.25 * span);
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end()), samples.end());
  // Extend towards the edges by halving the distance until every crossing counted by inertia is bracketed.
  double off_hi = hi_edge - samples.back(), off_lo = samples.front() - lo_limit;
  while (std::abs(beyond(samples.back()) - beyond(samples.front())) < sol.expected) {
    const bool grow_hi = off_hi > guard_hi;
    const bool grow_lo = std::isfinite(lo_edge) && off_lo > guard_lo;
    if (!grow_hi && !grow_lo) break;
    if (grow_hi) {
      off_hi *= 0.5;
      samples.push_back(hi_edge - off_hi);
    }
    if (grow_lo) {
      off_lo *= 0.5;
      samples.insert(samples.begin(), lo_limit + off_lo);
    }
  }
  std::vector<int> counts;
  for (double l : samples) counts.push_back(beyond(l));
  // For W >= 0 with target > 0 the count grows with lambda; otherwise it shrinks.
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const int c0 = counts[i], c1 = counts[i + 1];
    if (c0 == c1) continue;
    const int k_lo = std::min(c0, c1), k_hi = std::max(c0, c1);
    for (int k = k_lo; k < k_hi; ++k) {
      auto f = [&](double lam) { return value(k, lam); };
      double a = samples[i], b = samples[i + 1];
      double fa = f(a), fb = f(b);
      if (fa == 0.0) {
        sol.roots.push_back(a);
        sol.ranks.push_back(k);
        continue;
      }
      if (fb == 0.0) {
        sol.roots.push_back(b);
        sol.ranks.push_back(k);
        continue;
      }
      if ((fa < 0) == (fb < 0)) continue;
      boost::uintmax_t iters = 100;
      const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(46), iters);
      const double fr1 = std::abs(f(r.first)), fr2 = std::abs(f(r.second));
      sol.roots.push_back(fr1 <= fr2 ? r.first : r.second);
      sol.ranks.push_back(k);
    }
  }
  std::vector<std::size_t> idx(sol.roots.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return sol.roots[a] < sol.roots[b]; });
  std::vector<double> roots;
  std::vector<int> ranks;
  for (std::size_t i : idx) {
    roots.push_back(sol.roots[i]);
    ranks.push_back(sol.ranks[i]);
  }
  sol.roots = roots;
  sol.ranks = ranks;
  const Eigen::VectorXd rv = Eigen::Map<Eigen::VectorXd>(roots.data(), static_cast<Eigen::Index>(roots.size()));
  cluster_levels(rv, kClusterTol, sol.levels, sol.multiplicities);
  for (int& m : sol.multiplicities) m *= h0.angular_multiplicity();
  return sol;
}

int pencil_kernel_dimension(const TruncatedH0& h0, const Eigen::VectorXd& w, double lambda, double gamma,
                            double rank_tol, double w_floor) {
  const BSOperator op = assemble_bs(h0, w, lambda, w_floor);
  if (op.matrix.rows() == 0) return 0;
  Eigen::MatrixXd m = gamma * op.matrix;
  m.diagonal().array() += 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& s = svd.singularValues();
  return static_cast<int>((s.array() <= rank_tol).count());
}

IndefiniteSplit indefinite_split(const TruncatedH0& h0, const Eigen::VectorXd& w, double lambda, double w_floor) {
  const BSOperator full = assemble_bs(h0, w, lambda, w_floor);
  IndefiniteSplit s;
  s.re_x = 0.5 * (full.matrix + full.matrix.transpose());
  // X_{W+-} are the restrictions of X_|W| to supp W+- (same resolvent block as X_W)
  const BSOperator abs_op = assemble_bs(h0, w.cwiseAbs(), lambda, w_floor);
  const auto k = static_cast<Eigen::Index>(full.support.size());
  auto embedded = [&](double sgn) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j)
        if (full.sign[i] == sgn && full.sign[j] == sgn) out(i, j) = abs_op.matrix(i, j);
    return out;
  };
  s.x_plus = embedded(1.0);
  s.x_minus = embedded(-1.0);
  s.residual = (s.re_x - (s.x_plus - s.x_minus)).norm();
  return s;
}

MultiplicityReport multiplicity_bound_check(const TruncatedH0& h0, const Eigen::VectorXd& w,
                                            const std::vector<double>& gammas, double lo, double hi, int bound) {
  MultiplicityReport rep;
  rep.bound = bound;
  for (double g : gammas) {
    const OracleResult r = gap_spectrum(h0, w, g, lo, hi);
    rep.gamma.push_back(g);
    rep.levels.push_back(r.levels);
    rep.multiplicities.push_back(r.multiplicities);
    for (int m : r.multiplicities)
      if (m > bound) rep.within_bound = false;
  }
  return rep;
}

}  // namespace vbl
