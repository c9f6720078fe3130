#include "vbl/lanczos.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>

#include "vbl/errors.hpp"

namespace vbl {

struct ShiftedFactor::Impl {
  SpMat shifted;
  // tridiagonal fast path: A - sigma = L D L^T with unit lower bidiagonal L
  bool tridiagonal = false;
  Eigen::VectorXd tri_d, tri_l, tri_off;
  bool tri_ok = false;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool ldlt_ok = false;
  std::unique_ptr<Eigen::SparseLU<SpMat>> lu;
  std::mutex lu_mutex;

  void ensure_shifted(const SpMat& a, double sigma) {
    if (shifted.rows() == a.rows()) return;
    SpMat eye(a.rows(), a.cols());
    eye.setIdentity();
    shifted = a - sigma * eye;
    shifted.makeCompressed();
  }

  void ensure_lu(const SpMat& a, double sigma) {
    std::lock_guard<std::mutex> lock(lu_mutex);
    if (lu) return;
    ensure_shifted(a, sigma);
    lu = std::make_unique<Eigen::SparseLU<SpMat>>();
    lu->analyzePattern(shifted);
    lu->factorize(shifted);
    if (lu->info() != Eigen::Success) throw NumericalError("sparse LU factorization failed");
  }
};

namespace {

double inf_norm(const SpMat& a) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(a.rows());
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

}  // namespace

ShiftedFactor::ShiftedFactor(const SpMat& a, double sigma)
    : impl_(std::make_unique<Impl>()), a_(&a), sigma_(sigma) {
  if (a.rows() != a.cols()) throw InvalidArgument("ShiftedFactor needs a square matrix");
  norm_a_ = inf_norm(a) + std::abs(sigma);
  const SpMat& m = a;
  bool tri = true;
  for (int k = 0; k < m.outerSize() && tri; ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      if (std::abs(it.row() - it.col()) > 1 && it.value() != 0.0) {
        tri = false;
        break;
      }
  if (tri) {
    const Eigen::Index n = m.rows();
    impl_->tridiagonal = true;
    impl_->tri_d.resize(n);
    impl_->tri_l = Eigen::VectorXd::Zero(std::max<Eigen::Index>(n - 1, 0));
    impl_->tri_off = Eigen::VectorXd::Zero(std::max<Eigen::Index>(n - 1, 0));
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < m.outerSize(); ++k)
      for (SpMat::InnerIterator it(m, k); it; ++it) {
        if (it.row() == it.col()) diag[it.row()] = it.value() - sigma;
        else if (it.row() == it.col() + 1) impl_->tri_off[it.col()] = it.value();
      }
    impl_->tri_ok = true;
    const double tiny = std::numeric_limits<double>::epsilon() * std::max(norm_a_, 1e-300);
    for (Eigen::Index i = 0; i < n; ++i) {
      double di = diag[i];
      if (i > 0) di -= impl_->tri_l[i - 1] * impl_->tri_off[i - 1];
      if (di == 0.0) {
        impl_->tri_ok = false;
        di = tiny;
      }
      impl_->tri_d[i] = di;
      if (i + 1 < n) impl_->tri_l[i] = impl_->tri_off[i] / di;
    }
    return;
  }
  impl_->ensure_shifted(a, sigma);
  impl_->ldlt.compute(impl_->shifted);
  impl_->ldlt_ok = impl_->ldlt.info() == Eigen::Success;
  if (!impl_->ldlt_ok) impl_->ensure_lu(a, sigma);
}

ShiftedFactor::~ShiftedFactor() = default;
ShiftedFactor::ShiftedFactor(ShiftedFactor&&) noexcept = default;
ShiftedFactor& ShiftedFactor::operator=(ShiftedFactor&&) noexcept = default;

Eigen::VectorXd ShiftedFactor::solve(const Eigen::VectorXd& b) const {
  const double nb = b.norm();
  if (nb == 0.0) return Eigen::VectorXd::Zero(b.size());
  auto attempt = [&](auto& solver) {
    Eigen::VectorXd x = solver.solve(b);
    Eigen::VectorXd r = b - (*a_ * x - sigma_ * x);
    auto settled = [&] { return r.norm() <= 1e-14 * nb || r.norm() <= 1e-15 * (norm_a_ * x.norm() + nb); };
    for (int it = 0; it < 3 && !settled(); ++it) {
      x += solver.solve(r);
      r = b - (*a_ * x - sigma_ * x);
    }
    return std::make_pair(x, r.norm());
  };
  auto accept = [&](const Eigen::VectorXd& x, double rn) {
    last_residual_ = rn / nb;
    const double backward = rn / (norm_a_ * x.norm() + nb);
    return last_residual_ <= 1e-10 || backward <= 1e-12;
  };
  if (impl_->tridiagonal && impl_->tri_ok) {
    struct Tri {
      const Impl* im;
      Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        const Eigen::Index n = rhs.size();
        Eigen::VectorXd x = rhs;
        for (Eigen::Index i = 1; i < n; ++i) x[i] -= im->tri_l[i - 1] * x[i - 1];
        x.array() /= im->tri_d.array();
        for (Eigen::Index i = n - 2; i >= 0; --i) x[i] -= im->tri_l[i] * x[i + 1];
        return x;
      }
    } tri{impl_.get()};
    auto [x, rn] = attempt(tri);
    if (accept(x, rn)) return x;
  } else if (impl_->ldlt_ok) {
    auto [x, rn] = attempt(impl_->ldlt);
    if (accept(x, rn)) return x;
  }
  impl_->ensure_lu(*a_, sigma_);
  auto [x, rn] = attempt(*impl_->lu);
  if (accept(x, rn)) return x;
  throw NumericalError("linear solve residual " + std::to_string(rn / nb) + " exceeds 1e-10 relative");
}

int ShiftedFactor::negative_count() const {
  if (impl_->tridiagonal) return static_cast<int>((impl_->tri_d.array() < 0.0).count());
  if (!impl_->ldlt_ok) throw NumericalError("LDL^T factorization failed; inertia unavailable");
  const Eigen::VectorXd dvec = impl_->ldlt.vectorD();
  if ((dvec.array() == 0.0).any()) throw NumericalError("shift coincides with an eigenvalue");
  return static_cast<int>((dvec.array() < 0.0).count());
}

namespace {

// Ritz pairs of A on the m-dimensional Krylov space of (A - sigma)^-1, sorted by distance to sigma.
// The space is orthonormalized in full and A is projected explicitly, which stays accurate when sigma
// sits almost on an eigenvalue. Vectors in `locked` are projected out so converged eigenvectors are
// not found twice.
EigenPairs lanczos_ritz(const SpMat& a, const ShiftedFactor& fac, const Eigen::VectorXd& v0, int m,
                        const Eigen::MatrixXd& locked = Eigen::MatrixXd()) {
  const int n = static_cast<int>(a.rows());
  const bool deflate = locked.cols() > 0;
  auto project = [&](Eigen::VectorXd& v) {
    if (deflate)
      for (int pass = 0; pass < 2; ++pass) v -= locked * (locked.transpose() * v);
  };
  Eigen::MatrixXd q(n, m);
  Eigen::VectorXd start = v0;
  project(start);
  q.col(0) = start / start.norm();
  int steps = m;
  for (int j = 0; j + 1 < m; ++j) {
    Eigen::VectorXd w = fac.solve(q.col(j));
    project(w);
    const double wn = w.norm();
    for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
    const double beta = w.norm();
    if (beta <= 1e-13 * wn) {
      steps = j + 1;
      break;
    }
    q.col(j + 1) = w / beta;
  }
  const Eigen::MatrixXd qs = q.leftCols(steps);
  const Eigen::MatrixXd aq = a * qs;
  Eigen::MatrixXd hproj = qs.transpose() * aq;
  hproj = 0.5 * (hproj + hproj.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hproj);
  const double sigma = fac.shift();
  std::vector<int> order(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return std::abs(es.eigenvalues()[x] - sigma) < std::abs(es.eigenvalues()[y] - sigma);
  });
  EigenPairs out;
  out.values.resize(steps);
  out.vectors.resize(n, steps);
  out.residuals.resize(steps);
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd y = es.eigenvectors().col(order[static_cast<std::size_t>(k)]);
    Eigen::VectorXd x = qs * y;
    Eigen::VectorXd ax = aq * y;
    const double nx = x.norm();
    x /= nx;
    ax /= nx;
    const double rq = x.dot(ax);
    out.values[k] = rq;
    out.vectors.col(k) = x;
    out.residuals[k] = (ax - rq * x).norm();
  }
  return out;
}

EigenPairs select_sorted(const EigenPairs& in, std::vector<int> idx) {
  std::sort(idx.begin(), idx.end(), [&](int x, int y) { return in.values[x] < in.values[y]; });
  EigenPairs out;
  const auto k = static_cast<Eigen::Index>(idx.size());
  out.values.resize(k);
  out.vectors.resize(in.vectors.rows(), k);
  out.residuals.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    out.values[i] = in.values[idx[static_cast<std::size_t>(i)]];
    out.vectors.col(i) = in.vectors.col(idx[static_cast<std::size_t>(i)]);
    out.residuals[i] = in.residuals[idx[static_cast<std::size_t>(i)]];
  }
  return out;
}

Eigen::VectorXd start_vector(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v0(n);
  for (int i = 0; i < n; ++i) v0[i] = normal(rng);
  return v0;
}

// Krylov dimension limit keeping the basis below ~2 GB.
int max_krylov(int n) { return std::max(40, std::min(n, static_cast<int>(2.5e8 / std::max(1, n)))); }

}  // namespace

EigenPairs shift_invert_lanczos(const SpMat& a, double sigma, int nev, double tol, unsigned seed) {
  const int n = static_cast<int>(a.rows());
  if (nev < 1 || nev > n) throw InvalidArgument("shift_invert_lanczos: nev out of range");
  const ShiftedFactor fac(a, sigma);
  const Eigen::VectorXd v0 = start_vector(n, seed);
  const double scale = std::max(1.0, inf_norm(a));
  const int cap = max_krylov(n);
  for (int m = std::min(n, std::max(2 * nev + 20, 40));; m = std::min({n, cap, 2 * m})) {
    const EigenPairs ritz = lanczos_ritz(a, fac, v0, m);
    const int take = std::min<int>(nev, static_cast<int>(ritz.values.size()));
    std::vector<int> idx;
    bool converged = true;
    for (int k = 0; k < take; ++k) {
      idx.push_back(k);
      if (ritz.residuals[k] > tol * scale) converged = false;
    }
    if (converged) return select_sorted(ritz, idx);
    if (m >= std::min(n, cap)) throw NumericalError("shift-invert Lanczos did not converge");
  }
}

int count_in_window(const SpMat& a, double lo, double hi) {
  if (!(hi > lo)) return 0;
  if (std::isinf(lo)) return ShiftedFactor(a, hi).negative_count();
  return ShiftedFactor(a, hi).negative_count() - ShiftedFactor(a, lo).negative_count();
}

namespace {

int negatives_at(const SpMat& a, double x) {
  for (int attempt = 0;; ++attempt) {
    try {
      return ShiftedFactor(a, x).negative_count();
    } catch (const NumericalError&) {
      if (attempt == 3) throw;
      x += 1e-14 * std::max(1.0, std::abs(x));
    }
  }
}

struct Slice {
  double a, b;
  int count;
};

// Splits [lo, hi) by inertia bisection into slices holding one eigenvalue, narrowed until the slice is
// small against its distance to the neighbouring eigenvalues, or holding an unsplittable cluster.
std::vector<Slice> spectrum_slices(const SpMat& a, double lo, double hi, int n_lo, int n_hi, double cluster_tol) {
  std::vector<Slice> out;
  struct Item {
    double a, b;
    int na, nb;
    double outer_a, outer_b;  // isolating interval
  };
  std::vector<Item> stack{{lo, hi, n_lo, n_hi, lo, hi}};
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    const int c = it.nb - it.na;
    if (c <= 0) continue;
    const double w = it.b - it.a;
    const double mid = 0.5 * (it.a + it.b);
    if (c > 1 && w <= cluster_tol) {
      out.push_back({it.a, it.b, c});
      continue;
    }
    if (c == 1) {
      const double room = std::min(mid - it.outer_a, it.outer_b - mid);
      const double ulp = 8.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(it.a), std::abs(it.b));
      if (w <= 1e-3 * room || w <= ulp) {
        out.push_back({it.a, it.b, 1});
        continue;
      }
    }
    const int nm = negatives_at(a, mid);
    const int left = nm - it.na, right = it.nb - nm;
    // an isolated eigenvalue keeps its isolating interval; otherwise the halves start afresh
    auto outer = [&](double x0, double x1) {
      return c == 1 ? std::make_pair(it.outer_a, it.outer_b) : std::make_pair(x0, x1);
    };
    if (right > 0) {
      const auto o = outer(mid, it.b);
      stack.push_back({mid, it.b, nm, it.nb, o.first, o.second});
    }
    if (left > 0) {
      const auto o = outer(it.a, mid);
      stack.push_back({it.a, mid, it.na, nm, o.first, o.second});
    }
  }
  std::sort(out.begin(), out.end(), [](const Slice& x, const Slice& y) { return x.a < y.a; });
  return out;
}

double gershgorin_lower(const SpMat& a) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(a.rows()), off = Eigen::VectorXd::Zero(a.rows());
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it) {
      if (it.row() == it.col()) diag[it.row()] += it.value();
      else off[it.row()] += std::abs(it.value());
    }
  return (diag - off).minCoeff();
}

}  // namespace

EigenPairs eigen_in_window(const SpMat& a, double lo, double hi, int dense_limit, double tol) {
  const int n = static_cast<int>(a.rows());
  if (n <= dense_limit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(a)};
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    EigenPairs all;
    all.values = es.eigenvalues();
    all.vectors = es.eigenvectors();
    all.residuals.resize(n);
    std::vector<int> keep;
    for (int i = 0; i < n; ++i) {
      if (all.values[i] < lo || all.values[i] >= hi) continue;
      all.residuals[i] = (a * all.vectors.col(i) - all.values[i] * all.vectors.col(i)).norm();
      keep.push_back(i);
    }
    return select_sorted(all, keep);
  }
  const double scale = std::max(1.0, inf_norm(a));
  if (std::isinf(lo)) lo = std::min(hi, gershgorin_lower(a)) - 1.0;
  const int n_lo = negatives_at(a, lo), n_hi = negatives_at(a, hi);
  EigenPairs out;
  out.values.resize(0);
  out.vectors.resize(n, 0);
  out.residuals.resize(0);
  if (n_hi - n_lo <= 0) return out;
  const double cluster_tol = 64.0 * std::numeric_limits<double>::epsilon() * scale;
  const std::vector<Slice> slices = spectrum_slices(a, lo, hi, n_lo, n_hi, cluster_tol);

  std::vector<double> values, residuals;
  std::vector<Eigen::VectorXd> vectors;
  for (const Slice& sl : slices) {
    const double mid = 0.5 * (sl.a + sl.b);
    const ShiftedFactor fac(a, mid);
    Eigen::MatrixXd locked(n, 0);
    unsigned seed = 20240601u;
    int found = 0;
    int m = std::min(n, 20);
    const int cap = max_krylov(n);
    while (found < sl.count) {
      const EigenPairs ritz = lanczos_ritz(a, fac, start_vector(n, seed), m, locked);
      int best = -1;
      for (int k = 0; k < ritz.values.size(); ++k) {
        const double pad = std::max(cluster_tol, 1e-3 * (sl.b - sl.a));
        if (ritz.values[k] >= sl.a - pad && ritz.values[k] < sl.b + pad && ritz.residuals[k] <= tol * scale) {
          best = k;
          break;
        }
      }
      if (best < 0) {
        if (m >= std::min(n, cap))
          throw NumericalError("window eigensolver did not converge near " + std::to_string(mid));
        m = std::min({n, cap, 2 * m});
        continue;
      }
      values.push_back(ritz.values[best]);
      residuals.push_back(ritz.residuals[best]);
      vectors.push_back(ritz.vectors.col(best));
      locked.conservativeResize(n, locked.cols() + 1);
      locked.col(locked.cols() - 1) = ritz.vectors.col(best);
      ++found;
      ++seed;
    }
  }
  std::vector<int> idx(values.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  EigenPairs all;
  all.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  all.residuals = Eigen::Map<Eigen::VectorXd>(residuals.data(), static_cast<Eigen::Index>(residuals.size()));
  all.vectors.resize(n, static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t i = 0; i < vectors.size(); ++i) all.vectors.col(static_cast<Eigen::Index>(i)) = vectors[i];
  return select_sorted(all, idx);
}

}  // namespace vbl
