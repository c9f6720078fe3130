#include "vbl/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "vbl/bands.hpp"
#include "vbl/birman_schwinger.hpp"
#include "vbl/discrete_h0.hpp"
#include "vbl/edge_model.hpp"
#include "vbl/errors.hpp"
#include "vbl/fiber.hpp"
#include "vbl/green.hpp"
#include "vbl/oracle.hpp"
#include "vbl/parallel.hpp"
#include "vbl/predictor.hpp"
#include "vbl/version.hpp"

namespace vbl {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Tolerances of the verdicts emitted by compare and green-check.
constexpr double kPencilAbs = 1e-8;
constexpr double kGreenClosedForm = 1e-9;
constexpr double kLatticeSum1d = 1e-12;
constexpr double kFiberResolvent = 1e-6;
constexpr double kTimeReversal = 1e-10;
constexpr double kCutoff = 1e-8;
constexpr double kPhase = 1e-12;

std::string num(double x) {
  if (std::isnan(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json num_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json point_json(const Point& p, int d) {
  json a = json::array();
  for (int i = 0; i < d; ++i) a.push_back(p[i]);
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

// One CSV table: header row, comma separated, %.17g numbers.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : width_(header.size()) { row(header); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < width_; ++i) {
      if (i) out_ << ',';
      if (i < cells.size()) out_ << cells[i];
    }
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::size_t width_;
  std::ostringstream out_;
};

const char* side_name(EdgeSide s) { return s == EdgeSide::upper ? "upper" : "lower"; }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct Context {
  const RunConfig& cfg;
  fs::path out;
  json timings = json::object();
  json summary = json::object();
  std::vector<std::string> artifacts;
  double calibration = 1.0;
  bool verified = true;

  Context(const RunConfig& c, fs::path o) : cfg(c), out(std::move(o)) {}

  void write(const std::string& name, const std::string& text) {
    const fs::path p = out / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write " + p.string());
    f << text;
    if (!f) throw Error("write failed for " + p.string());
    artifacts.push_back(p.string());
  }

  template <class F>
  auto timed(const std::string& stage, F&& f) -> decltype(f()) {
    const auto t0 = Clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timings[stage] = timings.value(stage, 0.0) + std::chrono::duration<double>(Clock::now() - t0).count();
    } else {
      auto r = f();
      timings[stage] = timings.value(stage, 0.0) + std::chrono::duration<double>(Clock::now() - t0).count();
      return r;
    }
  }
};

// Side of the gap whose edge generates levels for this coupling.
EdgeSide side_for(const RunConfig& c, double gamma) {
  const bool positive_w = c.perturbation.definite();
  return (gamma < 0) == positive_w ? EdgeSide::upper : EdgeSide::lower;
}

void check_couplings(const RunConfig& c) {
  if (c.gap_index != 0 && !c.synthetic) return;
  for (std::size_t i = 0; i < c.gammas.size(); ++i)
    if (c.perturbation.definite() && c.gammas[i] > 0)
      throw ConfigError("/gammas/" + std::to_string(i) +
                        ": gamma > 0 with W >= 0 creates no level below the spectrum; use gap_index >= 1");
}

// ---- periodic edge -------------------------------------------------------------------------------

struct PeriodicEdge {
  std::unique_ptr<FiberDispersion> disp;
  std::optional<BandStructure> bs;
  std::vector<SpectralGap> gaps;
  SpectralGap gap;
  std::map<EdgeSide, GapEdge> edges;
  std::map<EdgeSide, NonDegenerateEdgeModel> models;  // definite W only
  std::map<EdgeSide, double> curvature;
};

void require_periodic(const RunConfig& c, const char* command) {
  if (c.synthetic) throw ConfigError(std::string("/synthetic: command '") + command + "' needs a periodic problem");
}

BandStructure sweep(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  return ctx.timed("bands", [&] {
    const FiberDispersion disp(c.potential, c.cutoff());
    return sweep_bands(disp, MomentumGrid(c.dimension, c.band_grid()), c.n_bands());
  });
}

PeriodicEdge periodic_edge(Context& ctx, const std::vector<EdgeSide>& sides, bool with_model) {
  const RunConfig& c = ctx.cfg;
  PeriodicEdge e;
  e.disp = std::make_unique<FiberDispersion>(c.potential, c.cutoff());
  e.bs = ctx.timed("bands", [&] {
    return sweep_bands(*e.disp, MomentumGrid(c.dimension, c.band_grid()), std::max(c.n_bands(), c.gap_index + 2));
  });
  e.gaps = find_gaps(*e.bs, c.numerics.tol.gap_tol);
  if (c.gap_index >= static_cast<int>(e.gaps.size()))
    throw NumericalError("gap " + std::to_string(c.gap_index) + " is not open at gap_tol " + num(c.numerics.tol.gap_tol) +
                         " (" + std::to_string(e.gaps.size()) + " gaps found)");
  const SpectralGap coarse = e.gaps[static_cast<std::size_t>(c.gap_index)];
  e.gap = ctx.timed("edge", [&] { return refine_gap(*e.disp, *e.bs, coarse, c.numerics.tol); });
  for (EdgeSide s : sides) {
    if (s == EdgeSide::lower && coarse.semi_infinite()) continue;
    GapEdge edge = ctx.timed("edge", [&] { return refine_edge(*e.disp, *e.bs, coarse, s, c.numerics.tol); });
    ctx.timed("edge", [&] { attach_bloch(edge, *e.disp, CellGrid{c.dimension, c.numerics.cell_grid}); });
    double curv = 0.0;
    for (const auto& x : edge.extrema) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.hessian);
      curv = std::max(curv, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    e.curvature[s] = curv;
    if (with_model && c.perturbation.definite())
      e.models[s] = ctx.timed("edge", [&] {
        return build_edge_model(edge, c.perturbation, perturbation_quadrature(c.perturbation));
      });
    e.edges[s] = std::move(edge);
  }
  return e;
}

std::vector<EdgeSide> sides_of(const RunConfig& c) {
  std::vector<EdgeSide> s;
  for (double g : c.gammas) {
    const EdgeSide side = side_for(c, g);
    if (std::find(s.begin(), s.end(), side) == s.end()) s.push_back(side);
  }
  return s;
}

json edge_json(const GapEdge& edge, const NonDegenerateEdgeModel* model, const PerturbationSpec& W) {
  json j;
  j["side"] = side_name(edge.side);
  j["value"] = edge.value;
  j["band"] = edge.band + 1;
  j["degenerate"] = edge.degenerate;
  j["extrema"] = json::array();
  j["masses"] = json::array();
  for (const auto& x : edge.extrema) {
    j["extrema"].push_back({{"p", point_json(x.p, edge.d)},
                            {"value", x.value},
                            {"hessian", matrix_json(x.hessian)},
                            {"mass", x.mass},
                            {"simple", x.simple},
                            {"simplicity_margin", num_json(x.simplicity_margin)},
                            {"morse", x.morse}});
    j["masses"].push_back(x.mass);
  }
  const int m = asymptotic_multiplicity(edge);
  j["asymptotic_multiplicity"] = m == kInfiniteMultiplicity ? json("infinite") : json(m);
  const ThresholdVerdict tv = threshold_verdict(edge, W);
  j["threshold"] = {{"has_virtuals", tv.has_virtuals},
                    {"no_virtuals_for_small_gamma", tv.no_virtuals_for_small_gamma},
                    {"reason", tv.reason}};
  if (model) {
    j["nu"] = std::vector<double>(model->nu.data(), model->nu.data() + model->nu.size());
    j["norms2"] = model->norms2;
    j["gram_condition_number"] = num_json(model->condition_number);
    j["lieb_thirring_coefficient"] = lieb_thirring_sum(*model, 1.0);
  } else {
    j["nu"] = nullptr;
    j["gram_condition_number"] = nullptr;
    j["note"] = "W is indefinite; the Gram model needs W >= 0";
  }
  return j;
}

Prediction periodic_prediction(const PeriodicEdge& e, const RunConfig& c, double gamma) {
  const EdgeSide s = side_for(c, gamma);
  auto it = e.edges.find(s);
  if (it == e.edges.end()) throw ConfigError("/gammas: no gap edge on the " + std::string(side_name(s)) + " side");
  auto mt = e.models.find(s);
  return predict(it->second, mt == e.models.end() ? nullptr : &mt->second, nullptr, gamma, e.gap.width());
}

// ---- synthetic edge ------------------------------------------------------------------------------

struct SyntheticEdge {
  std::optional<SyntheticDispersion> sd;
  GapEdge edge;
  std::optional<DegenerateEdgeModel> model;
};

SyntheticEdge synthetic_setup(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  SyntheticEdge s;
  s.sd = c.synthetic->dispersion(c.dimension);
  s.edge = synthetic_edge(*s.sd, c.numerics.degenerate_samples, c.numerics.tol);
  if (!s.edge.degenerate && c.dimension < 3)
    throw ConfigError("/synthetic: a point minimum in d < 3 has no degenerate model; use a periodic problem with V = 0");
  if (s.edge.degenerate && s.edge.codim < 3) {
    if (!c.perturbation.definite()) throw ConfigError("/perturbation: the degenerate model needs W >= 0");
    s.model = ctx.timed("edge", [&] { return degenerate_gw(*s.sd, c.perturbation, c.numerics.degenerate_samples); });
    ctx.calibration = s.model->calibration;
  }
  return s;
}

// Levels whose nu is resolved above the rounding floor of the degenerate model.
int resolved_levels(const SyntheticEdge& s) {
  if (!s.model || s.model->nu.size() == 0) return 0;
  int n = 0;
  while (n < s.model->nu.size() && s.model->nu[n] > 1e-10 * s.model->nu[0]) ++n;
  return n;
}

Prediction synthetic_prediction(const SyntheticEdge& s, double gamma, int n) {
  return predict(s.edge, nullptr, s.model ? &*s.model : nullptr, gamma, kInf, n);
}

// ---- discretized operators -----------------------------------------------------------------------

struct Discretized {
  TruncatedH0 h0;
  Eigen::VectorXd w;
  bool capped = false;
};

Discretized discretize(Context& ctx, double depth_hint, double curvature) {
  const RunConfig& c = ctx.cfg;
  const Numerics& n = c.numerics;
  Discretized d;
  const double L = depth_hint > 0 ? auto_half_width(n.L_min, depth_hint, curvature, n.L_cap, &d.capped) : n.L_min;
  d.h0 = ctx.timed("discretize", [&] {
    if (n.geometry == Geometry::radial) {
      if (!c.potential.coefficients().empty())
        throw ConfigError("/numerics/geometry: the radial operator needs V = 0");
      return build_radial_h0(c.dimension, 0, L, n.h);
    }
    return build_truncated_h0(c.potential, L, n.h, c.gap_index);
  });
  d.w = d.h0.sample(c.perturbation);
  return d;
}

double discrete_edge(const TruncatedH0& h0, EdgeSide s) { return s == EdgeSide::upper ? h0.upper_edge : h0.lower_edge; }

struct OracleRun {
  double gamma = 0.0;
  EdgeSide side = EdgeSide::upper;
  double edge = 0.0;
  std::vector<double> values;  // deepest first
  std::vector<double> residuals;
  std::vector<int> multiplicity;
  double L = 0.0;
  int size = 0;
  bool capped = false;
};

OracleRun oracle_on(Context& ctx, const Discretized& d, double gamma, EdgeSide side) {
  const TruncatedH0& h0 = d.h0;
  const double guard_hi = 1e-12 * std::max(1.0, std::abs(h0.upper_edge));
  const double lo = std::isfinite(h0.lower_edge)
                        ? h0.lower_edge + 1e-12 * std::max(1.0, std::abs(h0.lower_edge))
                        : h0.upper_edge - std::abs(gamma) * d.w.cwiseAbs().maxCoeff() - 1.0;
  const OracleResult o = ctx.timed("oracle", [&] { return gap_spectrum(h0, d.w, gamma, lo, h0.upper_edge - guard_hi); });
  OracleRun r;
  r.gamma = gamma;
  r.side = side;
  r.edge = discrete_edge(h0, side);
  r.L = h0.L;
  r.size = h0.size();
  r.capped = d.capped;
  std::vector<std::size_t> order(static_cast<std::size_t>(o.eigenvalues.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (side == EdgeSide::lower) std::reverse(order.begin(), order.end());
  const int ang = h0.angular_multiplicity();
  std::vector<int> mult(order.size(), ang);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && std::abs(o.eigenvalues[static_cast<Eigen::Index>(j)] -
                                        o.eigenvalues[static_cast<Eigen::Index>(j - 1)]) <= kClusterTol)
      ++j;
    for (std::size_t k = i; k < j; ++k) mult[k] = static_cast<int>(j - i) * ang;
    i = j;
  }
  for (std::size_t i : order) {
    r.values.push_back(o.eigenvalues[static_cast<Eigen::Index>(i)]);
    r.residuals.push_back(o.residuals[static_cast<Eigen::Index>(i)]);
    r.multiplicity.push_back(mult[i]);
  }
  return r;
}

struct PencilRun {
  std::vector<double> roots;  // deepest first, same order convention as OracleRun
  std::vector<int> kernel_dims;
  int expected = 0;
  bool complete = true;
};

PencilRun pencil_on(Context& ctx, const Discretized& d, const BranchTable& table, double gamma, EdgeSide side) {
  PencilRun p;
  const PencilSolution sol = ctx.timed("pencil", [&] { return solve_pencil(d.h0, d.w, table, gamma); });
  p.roots = sol.roots;
  if (side == EdgeSide::lower) std::reverse(p.roots.begin(), p.roots.end());
  p.expected = sol.expected;
  p.complete = static_cast<int>(sol.roots.size()) == sol.expected;
  for (double root : p.roots)
    p.kernel_dims.push_back(ctx.timed("pencil", [&] {
      return pencil_kernel_dimension(d.h0, d.w, root, gamma, ctx.cfg.numerics.rank_tol);
    }) * d.h0.angular_multiplicity());
  return p;
}

BranchTable branches_on(Context& ctx, const Discretized& d, EdgeSide side) {
  const TruncatedH0& h0 = d.h0;
  const double scale = std::isfinite(h0.lower_edge) ? h0.gap_width() : 1.0;
  return ctx.timed("pencil", [&] {
    return characteristic_branches(h0, d.w,
                                   edge_lambda_grid(discrete_edge(h0, side), side, scale, ctx.cfg.numerics.lambda_points));
  });
}

// ---- k-space oracle for the synthetic circle -----------------------------------------------------

struct KSpaceLevels {
  std::vector<double> depths;  // deepest first, expanded by angular multiplicity
  std::vector<int> channel;
  double edge = 0.0;
};

void kspace_levels(Context& ctx, const SyntheticEdge& s, const std::vector<double>& gammas,
                   std::vector<KSpaceLevels>& per_gamma) {
  const RunConfig& c = ctx.cfg;
  per_gamma.assign(gammas.size(), {});
  KSpaceOptions opt;
  opt.finest = c.numerics.kspace_finest;
  for (int l = 0; l < c.numerics.channels; ++l) {
    const KSpaceChannel ch = ctx.timed("oracle", [&] { return build_kspace_channel(*s.sd, c.perturbation, l, opt); });
    for (std::size_t i = 0; i < gammas.size(); ++i) {
      const Eigen::VectorXd ev = ctx.timed("oracle", [&] {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ch.hamiltonian(gammas[i]), Eigen::EigenvaluesOnly);
        return Eigen::VectorXd(es.eigenvalues());
      });
      per_gamma[i].edge = ch.edge;
      for (Eigen::Index k = 0; k < ev.size() && ev[k] < ch.edge; ++k)
        for (int m = 0; m < channel_multiplicity(c.dimension, l); ++m) {
          per_gamma[i].depths.push_back(ch.edge - ev[k]);
          per_gamma[i].channel.push_back(l);
        }
    }
  }
  for (auto& lv : per_gamma) {
    std::vector<std::size_t> idx(lv.depths.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return lv.depths[a] > lv.depths[b]; });
    KSpaceLevels sorted;
    sorted.edge = lv.edge;
    for (std::size_t i : idx) {
      sorted.depths.push_back(lv.depths[i]);
      sorted.channel.push_back(lv.channel[i]);
    }
    lv = std::move(sorted);
  }
}

// ---- commands ------------------------------------------------------------------------------------

void cmd_bands(Context& ctx) {
  require_periodic(ctx.cfg, "bands");
  const int d = ctx.cfg.dimension;
  const BandStructure bs = sweep(ctx);
  std::vector<std::string> header;
  for (int j = 1; j <= d; ++j) header.push_back("p_" + std::to_string(j));
  for (int n = 1; n <= bs.n_bands; ++n) header.push_back("lambda_" + std::to_string(n));
  Csv csv(header);
  for (std::size_t i = 0; i < bs.grid.size(); ++i) {
    const Point p = bs.grid.point(i);
    std::vector<std::string> row;
    for (int j = 0; j < d; ++j) row.push_back(num(p[j]));
    for (int n = 0; n < bs.n_bands; ++n) row.push_back(num(bs.values(static_cast<Eigen::Index>(i), n)));
    csv.row(row);
  }
  ctx.write("bands.csv", csv.str());
  ctx.summary["n_points"] = bs.grid.size();
  ctx.summary["n_bands"] = bs.n_bands;
}

void cmd_gap(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  json j;
  if (c.synthetic) {
    const SyntheticDispersion sd = c.synthetic->dispersion(c.dimension);
    const GapEdge e = synthetic_edge(sd, c.numerics.degenerate_samples, c.numerics.tol);
    j = {{"j", 0},
         {"lambda_minus", nullptr},
         {"lambda_plus", e.value},
         {"edges", json::array({{{"side", "upper"}, {"value", e.value}, {"manifold", e.manifold}, {"codim", e.codim}}})}};
  } else {
    const PeriodicEdge e = periodic_edge(ctx, {EdgeSide::upper, EdgeSide::lower}, false);
    j["j"] = e.gap.j;
    j["lambda_minus"] = num_json(e.gap.lower);
    j["lambda_plus"] = e.gap.upper;
    j["width"] = num_json(e.gap.width());
    j["edges"] = json::array();
    for (const auto& [side, edge] : e.edges) {
      json x = {{"side", side_name(side)}, {"value", edge.value}, {"band", edge.band + 1}, {"extrema", json::array()}};
      for (const auto& ex : edge.extrema)
        x["extrema"].push_back({{"p", point_json(ex.p, c.dimension)}, {"value", ex.value}});
      j["edges"].push_back(x);
    }
    j["all_gaps"] = json::array();
    for (const auto& g : e.gaps)
      j["all_gaps"].push_back({{"j", g.j}, {"lambda_minus", num_json(g.lower)}, {"lambda_plus", g.upper}});
  }
  ctx.write("gap.json", j.dump(2) + "\n");
  ctx.summary["gap"] = j;
}

void cmd_edge(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  json j;
  if (c.synthetic) {
    const SyntheticEdge s = synthetic_setup(ctx);
    j = {{"side", "upper"},
         {"value", s.edge.value},
         {"degenerate", s.edge.degenerate},
         {"manifold", s.edge.manifold},
         {"codim", s.edge.codim},
         {"extrema", json::array()},
         {"masses", json::array()}};
    for (const auto& x : s.edge.samples) j["masses"].push_back(x.mass);
    const int m = asymptotic_multiplicity(s.edge);
    j["asymptotic_multiplicity"] = m == kInfiniteMultiplicity ? json("infinite") : json(m);
    const ThresholdVerdict tv = threshold_verdict(s.edge, c.perturbation);
    j["threshold"] = {{"has_virtuals", tv.has_virtuals},
                      {"no_virtuals_for_small_gamma", tv.no_virtuals_for_small_gamma},
                      {"reason", tv.reason}};
    if (s.model) {
      j["nu"] = std::vector<double>(s.model->nu.data(), s.model->nu.data() + s.model->nu.size());
      j["trace_diagonal"] = s.model->trace_diagonal;
      j["calibration"] = s.model->calibration;
    } else {
      j["nu"] = nullptr;
    }
    j["gram_condition_number"] = nullptr;
  } else {
    const std::vector<EdgeSide> sides = sides_of(c);
    const PeriodicEdge e = periodic_edge(ctx, sides, true);
    const EdgeSide primary = sides.front();
    auto model = [&](EdgeSide s) -> const NonDegenerateEdgeModel* {
      auto it = e.models.find(s);
      return it == e.models.end() ? nullptr : &it->second;
    };
    j = edge_json(e.edges.at(primary), model(primary), c.perturbation);
    j["gap"] = {{"j", e.gap.j}, {"lambda_minus", num_json(e.gap.lower)}, {"lambda_plus", e.gap.upper}};
    for (EdgeSide s : sides)
      if (s != primary && e.edges.count(s)) j["other_edge"] = edge_json(e.edges.at(s), model(s), c.perturbation);
  }
  ctx.write("edge.json", j.dump(2) + "\n");
  ctx.summary["edge"] = j;
}

std::vector<Prediction> predictions(Context& ctx, std::optional<PeriodicEdge>& pe, std::optional<SyntheticEdge>& se) {
  const RunConfig& c = ctx.cfg;
  std::vector<Prediction> out;
  if (c.synthetic) {
    se = synthetic_setup(ctx);
    const int n = resolved_levels(*se);
    for (double g : c.gammas) out.push_back(synthetic_prediction(*se, g, n));
  } else {
    if (!c.perturbation.definite()) throw ConfigError("/perturbation: predictions need W >= 0");
    pe = periodic_edge(ctx, sides_of(c), true);
    for (double g : c.gammas) out.push_back(periodic_prediction(*pe, c, g));
  }
  return out;
}

void cmd_predict(Context& ctx) {
  check_couplings(ctx.cfg);
  std::optional<PeriodicEdge> pe;
  std::optional<SyntheticEdge> se;
  const std::vector<Prediction> prs = ctx.timed("predict", [&] { return predictions(ctx, pe, se); });
  Csv csv({"gamma", "k", "rho_pred", "law", "validity_radius"});
  for (const auto& pr : prs) {
    if (pr.rho.empty()) csv.row({num(pr.gamma), "", "", law_name(pr.law), num(pr.validity_radius)});
    for (std::size_t k = 0; k < pr.rho.size(); ++k)
      csv.row({num(pr.gamma), std::to_string(k + 1), num(pr.rho[k]), law_name(pr.law), num(pr.validity_radius)});
  }
  ctx.write("predict.csv", csv.str());
}

void cmd_pencil(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  require_periodic(c, "pencil");
  check_couplings(c);
  if (!c.perturbation.definite()) throw ConfigError("/perturbation: the pencil needs a definite W");
  const std::vector<EdgeSide> sides = sides_of(c);
  PeriodicEdge e = periodic_edge(ctx, sides, true);
  // One box large enough for the shallowest predicted level.
  double depth = 0.0, curvature = 2.0;
  for (double g : c.gammas) {
    const Prediction pr = periodic_prediction(e, c, g);
    if (!pr.depth.empty() && (depth == 0.0 || pr.depth.front() < depth)) {
      depth = pr.depth.front();
      curvature = e.curvature.at(side_for(c, g));
    }
  }
  const Discretized d = discretize(ctx, depth, curvature);
  const EdgeSide primary = sides.front();
  const BranchTable table = branches_on(ctx, d, primary);
  int np = 0, nn = 0;
  for (std::size_t i = 0; i < table.lambdas.size(); ++i) {
    np = std::max(np, static_cast<int>(table.positive[i].size()));
    nn = std::max(nn, static_cast<int>(table.negative[i].size()));
  }
  std::vector<std::string> header{"lambda"};
  for (int k = 1; k <= np; ++k) header.push_back("mu_" + std::to_string(k));
  for (int k = 1; k <= nn; ++k) header.push_back("mu_neg_" + std::to_string(k));
  Csv branches(header);
  for (std::size_t i = 0; i < table.lambdas.size(); ++i) {
    std::vector<std::string> row{num(table.lambdas[i])};
    for (int k = 0; k < np; ++k) row.push_back(k < static_cast<int>(table.positive[i].size()) ? num(table.positive[i][k]) : "");
    for (int k = 0; k < nn; ++k) row.push_back(k < static_cast<int>(table.negative[i].size()) ? num(table.negative[i][k]) : "");
    branches.row(row);
  }
  ctx.write("pencil_branches.csv", branches.str());

  std::vector<PencilRun> runs;
  std::size_t width = 0;
  for (double g : c.gammas) {
    runs.push_back(pencil_on(ctx, d, table, g, side_for(c, g)));
    width = std::max(width, runs.back().roots.size());
  }
  std::vector<std::string> rh{"gamma"};
  for (std::size_t k = 1; k <= width; ++k) rh.push_back("rho_" + std::to_string(k));
  Csv roots(rh);
  json info = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::vector<std::string> row{num(c.gammas[i])};
    for (double r : runs[i].roots) row.push_back(num(r));
    roots.row(row);
    info.push_back({{"gamma", c.gammas[i]},
                    {"roots", runs[i].roots.size()},
                    {"expected_by_inertia", runs[i].expected},
                    {"kernel_dimensions", runs[i].kernel_dims}});
    if (!runs[i].complete) ctx.verified = false;
  }
  ctx.write("pencil_roots.csv", roots.str());
  ctx.summary["pencil"] = info;
  ctx.summary["discretization"] = {{"L", d.h0.L}, {"h", d.h0.h}, {"n", d.h0.size()}, {"capped", d.capped},
                                   {"upper_edge", d.h0.upper_edge}, {"lower_edge", num_json(d.h0.lower_edge)}};
  ctx.summary["worst_monotonicity_violation"] = table.worst_monotonicity_violation();
}

void cmd_oracle(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  check_couplings(c);
  Csv csv({"gamma", "k", "lambda", "depth", "multiplicity", "residual", "L", "n"});
  if (c.synthetic) {
    const SyntheticEdge s = synthetic_setup(ctx);
    std::vector<KSpaceLevels> lv;
    kspace_levels(ctx, s, c.gammas, lv);
    for (std::size_t i = 0; i < c.gammas.size(); ++i)
      for (std::size_t k = 0; k < lv[i].depths.size(); ++k)
        csv.row({num(c.gammas[i]), std::to_string(k + 1), num(lv[i].edge - lv[i].depths[k]), num(lv[i].depths[k]),
                 std::to_string(channel_multiplicity(c.dimension, lv[i].channel[k])), "", "", ""});
    ctx.write("oracle.csv", csv.str());
    return;
  }
  const std::vector<EdgeSide> sides = sides_of(c);
  const PeriodicEdge e = periodic_edge(ctx, sides, true);
  json info = json::array();
  for (double g : c.gammas) {
    const EdgeSide side = side_for(c, g);
    double depth = 0.0;
    if (c.perturbation.definite()) {
      const Prediction pr = periodic_prediction(e, c, g);
      if (!pr.depth.empty()) depth = pr.depth.front();
    }
    const Discretized d = discretize(ctx, depth, e.curvature.count(side) ? e.curvature.at(side) : 2.0);
    const OracleRun r = oracle_on(ctx, d, g, side);
    for (std::size_t k = 0; k < r.values.size(); ++k)
      csv.row({num(g), std::to_string(k + 1), num(r.values[k]), num(std::abs(r.edge - r.values[k])),
               std::to_string(r.multiplicity[k]), num(r.residuals[k]), num(r.L), std::to_string(r.size)});
    info.push_back({{"gamma", g}, {"L", r.L}, {"n", r.size}, {"capped", r.capped}, {"eigenvalues", r.values.size()},
                    {"edge", r.edge}});
  }
  ctx.write("oracle.csv", csv.str());
  ctx.summary["oracle"] = info;
}

// Relative error of the law constant f(depth)/|gamma| against the model constant.
double law_error(const Prediction& pr, int d, int codim, double calibration, double oracle_depth) {
  if (pr.constant.empty() || !(oracle_depth > 0)) return std::numeric_limits<double>::quiet_NaN();
  const double f = law_function(pr.law, d, codim, oracle_depth, calibration) / std::abs(pr.gamma);
  return std::abs(f - pr.constant.front()) / std::abs(pr.constant.front());
}

json law_verdict(const std::vector<double>& gammas, const std::vector<double>& err, const char* law) {
  // errors must shrink as |gamma| decreases
  std::vector<std::size_t> idx(gammas.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return std::abs(gammas[a]) > std::abs(gammas[b]); });
  bool pass = idx.size() >= 2;
  for (std::size_t i = 0; i + 1 < idx.size(); ++i)
    pass = pass && std::isfinite(err[idx[i]]) && std::isfinite(err[idx[i + 1]]) && err[idx[i + 1]] < err[idx[i]];
  json e = json::array();
  for (std::size_t i : idx) e.push_back({{"gamma", gammas[i]}, {"rel_err_constant", num_json(err[i])}});
  return {{"law", law}, {"errors", e}, {"pass", pass}, {"rule", "error of the law constant decreases as |gamma| decreases"}};
}

void cmd_compare(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  check_couplings(c);
  Csv csv({"gamma", "k", "rho_pred", "rho_pencil", "rho_oracle", "rel_err_pred", "rel_err_pencil"});
  json verdict = json::object();
  std::vector<double> law_err;
  const char* law = "";
  if (c.synthetic) {
    const SyntheticEdge s = synthetic_setup(ctx);
    std::vector<KSpaceLevels> lv;
    kspace_levels(ctx, s, c.gammas, lv);
    const int n = resolved_levels(s);
    for (std::size_t i = 0; i < c.gammas.size(); ++i) {
      const Prediction pr = synthetic_prediction(s, c.gammas[i], n);
      law = law_name(pr.law);
      const std::size_t rows = std::max(pr.depth.size(), lv[i].depths.size());
      for (std::size_t k = 0; k < rows; ++k) {
        const double dp = k < pr.depth.size() ? pr.depth[k] : std::numeric_limits<double>::quiet_NaN();
        const double dor = k < lv[i].depths.size() ? lv[i].depths[k] : std::numeric_limits<double>::quiet_NaN();
        csv.row({num(c.gammas[i]), std::to_string(k + 1), num(lv[i].edge - dp), "", num(lv[i].edge - dor),
                 num(std::abs(dp - dor) / dor), ""});
      }
      law_err.push_back(law_error(pr, c.dimension, s.edge.codim, ctx.calibration,
                                  lv[i].depths.empty() ? 0.0 : lv[i].depths.front()));
    }
  } else {
    if (!c.perturbation.definite()) throw ConfigError("/perturbation: compare needs W >= 0");
    const std::vector<EdgeSide> sides = sides_of(c);
    const PeriodicEdge e = periodic_edge(ctx, sides, true);
    int pairs = 0;
    double worst = 0.0;
    bool counts = true, kernels = true;
    for (double g : c.gammas) {
      const EdgeSide side = side_for(c, g);
      const Prediction pr = periodic_prediction(e, c, g);
      law = law_name(pr.law);
      const Discretized d = discretize(ctx, pr.depth.empty() ? 0.0 : pr.depth.front(), e.curvature.at(side));
      const OracleRun o = oracle_on(ctx, d, g, side);
      const BranchTable table = branches_on(ctx, d, side);
      const PencilRun p = pencil_on(ctx, d, table, g, side);
      counts = counts && p.complete && p.roots.size() == o.values.size();
      const double sgn = side == EdgeSide::upper ? -1.0 : 1.0;
      const std::size_t rows = std::max({pr.depth.size(), o.values.size(), p.roots.size()});
      for (std::size_t k = 0; k < rows; ++k) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const double rp = k < pr.depth.size() ? o.edge + sgn * pr.depth[k] : nan;
        const double rq = k < p.roots.size() ? p.roots[k] : nan;
        const double ro = k < o.values.size() ? o.values[k] : nan;
        const double dor = std::abs(o.edge - ro);
        csv.row({num(g), std::to_string(k + 1), num(rp), num(rq), num(ro), num(std::abs(rp - ro) / dor),
                 num(std::abs(rq - ro) / dor)});
        if (k < p.roots.size() && k < o.values.size()) {
          ++pairs;
          worst = std::max(worst, std::abs(rq - ro));
          kernels = kernels && p.kernel_dims[k] == o.multiplicity[k];
        }
      }
      law_err.push_back(law_error(pr, c.dimension, 0, 1.0, o.values.empty() ? 0.0 : std::abs(o.edge - o.values.front())));
    }
    verdict["pencil_equivalence"] = {{"pairs", pairs},
                                     {"worst_abs_diff", worst},
                                     {"tolerance", kPencilAbs},
                                     {"counts_match", counts},
                                     {"kernel_dimensions_match", kernels},
                                     {"pass", counts && kernels && pairs > 0 && worst <= kPencilAbs}};
  }
  verdict["law_convergence"] = law_verdict(c.gammas, law_err, law);
  bool pass = true;
  for (const auto& [k, v] : verdict.items()) pass = pass && v.at("pass").get<bool>();
  verdict["pass"] = pass;
  ctx.verified = pass;
  ctx.write("compare.csv", csv.str());
  ctx.write("verdict.json", verdict.dump(2) + "\n");
  ctx.summary["verdict"] = verdict;
}

void cmd_green_check(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  json checks = json::array();
  auto add = [&](const std::string& name, double value, double tol, bool pass, const std::string& note = "") {
    json j = {{"name", name}, {"value", num_json(value)}, {"tolerance", tol}, {"pass", pass}};
    if (!note.empty()) j["note"] = note;
    checks.push_back(j);
  };
  ctx.timed("green", [&] {
    double worst = 0.0;
    for (int d = 1; d <= 3; ++d)
      for (double g : {0.5, 1.0, 2.0, 3.0})
        for (double r : {0.1, 0.5, 1.0, 2.5}) {
          const double a = fundamental_solution(d, g, r), b = fundamental_solution_quadrature(d, g, r);
          worst = std::max(worst, std::abs(a - b) / a);
        }
    add("fundamental_solution_closed_form", worst, kGreenClosedForm, worst <= kGreenClosedForm);
    double s = 0.0;
    for (int d = 1; d <= 3; ++d)
      for (double g : {0.5, 2.0, 3.0})
        for (double r : {0.2, 0.7, 1.9}) s = std::max(s, scaling_residual(d, g, r) / fundamental_solution(d, g, r));
    add("helmholtz_scaling", s, 1e-9, s <= 1e-9);
    double lat = 0.0;
    for (double g : {0.5, 1.0, 2.5})
      for (double p : {0.0, 1.0, -2.5, kPi})
        for (double y : {0.0, 0.3, 0.77}) {
          const LatticeSum ls = lattice_green(1, g, CPoint{cplx(p, 0.0), 0.0, 0.0}, Point{y, 0, 0}, 1e-14);
          const cplx cl = lattice_green_1d_closed(g, cplx(p, 0.0), y);
          lat = std::max(lat, std::abs(ls.value - cl) / std::abs(cl));
        }
    add("lattice_sum_1d_closed_form", lat, kLatticeSum1d, lat <= kLatticeSum1d);
    double fib = 0.0;
    for (double p : {-3.0, -1.5, 0.0, 1.0, 2.9})
      for (double g : {0.3, 0.7, 1.0, 2.0, 4.0})
        for (double y : {0.0, 0.25, 0.6}) {
          const cplx k = fiber_resolvent_kernel(1, g, Point{p, 0, 0}, Point{y, 0, 0}, 64);
          const cplx ref =
              std::exp(cplx(0.0, -p * y)) * lattice_green(1, g, CPoint{cplx(p, 0.0), 0.0, 0.0}, Point{y, 0, 0}).value;
          fib = std::max(fib, std::abs(k - ref) / std::abs(ref));
        }
    add("fiber_resolvent_vs_lattice_sum", fib, kFiberResolvent, fib <= kFiberResolvent);
  });
  if (!c.synthetic) {
    ctx.timed("invariants", [&] {
      const int d = c.dimension;
      const double tr = time_reversal_check(c.potential, PlaneWaveBasis(d, c.cutoff()),
                                            MomentumGrid(d, std::min(c.band_grid(), 8)), c.n_bands());
      add("time_reversal", tr, kTimeReversal, tr <= kTimeReversal);
      std::vector<Point> probes{{0, 0, 0}, {kPi, 0, 0}, {1.0, 0, 0}};
      if (d >= 2) probes.push_back({0.7, -1.3, d == 3 ? 2.1 : 0.0});
      const CutoffReport cr = check_cutoff_convergence(c.potential, c.cutoff(), c.n_bands(), probes, kCutoff);
      add("fiber_cutoff_convergence", cr.deviation, kCutoff, cr.converged, "cutoff " + std::to_string(cr.cutoff));
    });
    if (c.perturbation.definite()) {
      ctx.timed("invariants", [&] {
        const PeriodicEdge e = periodic_edge(ctx, {EdgeSide::upper}, true);
        const auto& model = e.models.at(EdgeSide::upper);
        add("gram_positive_definite", model.nu.minCoeff(), 0.0, model.nu.minCoeff() > 0.0,
            "minimum nu; condition " + num(model.condition_number));
        GapEdge rot = e.edges.at(EdgeSide::upper);
        double angle = 0.7;
        for (auto& x : rot.extrema) {
          x.bloch = x.bloch->rephased(std::polar(1.0, angle));
          angle -= 2.3;
        }
        const auto m2 = build_edge_model(rot, c.perturbation, perturbation_quadrature(c.perturbation));
        const double ph = (m2.nu - model.nu).cwiseAbs().maxCoeff();
        add("phase_invariance_of_nu", ph, kPhase, ph <= kPhase);
      });
    }
  }
  bool pass = true;
  for (const auto& ch : checks) pass = pass && ch.at("pass").get<bool>();
  const json j = {{"checks", checks}, {"pass", pass}};
  ctx.verified = pass;
  ctx.write("green_check.json", j.dump(2) + "\n");
  ctx.summary["pass"] = pass;
}

const std::map<std::string, std::function<void(Context&)>>& command_table() {
  static const std::map<std::string, std::function<void(Context&)>> t{
      {"bands", cmd_bands},   {"gap", cmd_gap},       {"edge", cmd_edge},       {"predict", cmd_predict},
      {"pencil", cmd_pencil}, {"oracle", cmd_oracle}, {"compare", cmd_compare}, {"green-check", cmd_green_check}};
  return t;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"bands", "gap", "edge", "predict", "pencil", "oracle", "compare", "green-check"};
  return names;
}

RunReport run_command(const std::string& command, const RunConfig& cfg, const std::string& out_dir) {
  auto it = command_table().find(command);
  if (it == command_table().end()) throw ConfigError("unknown command '" + command + "'");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory " + out_dir + ": " + ec.message());
  Context ctx(cfg, fs::path(out_dir));
  const auto t0 = Clock::now();
  try {
    it->second(ctx);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("/: ") + e.what());
  }
  json manifest;
  manifest["tool"] = "vbl";
  manifest["version"] = kVersion;
  manifest["config_schema_version"] = kConfigSchemaVersion;
  manifest["command"] = command;
  char hash[32];
  std::snprintf(hash, sizeof hash, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a(cfg.normalized)));
  manifest["inputs_hash"] = hash;
  manifest["config"] = json::parse(cfg.normalized);
  manifest["threads"] = thread_count();
  ctx.timings["total"] = std::chrono::duration<double>(Clock::now() - t0).count();
  manifest["timings_seconds"] = ctx.timings;
  manifest["calibration"] = ctx.calibration;
  manifest["verified"] = ctx.verified;
  manifest["artifacts"] = json::array();
  for (const auto& a : ctx.artifacts) manifest["artifacts"].push_back(fs::path(a).filename().string());
  manifest["summary"] = ctx.summary;
  RunReport r;
  r.command = command;
  r.verified = ctx.verified;
  r.manifest = manifest.dump(2) + "\n";
  ctx.write("manifest.json", r.manifest);
  r.artifacts = ctx.artifacts;
  return r;
}

}  // namespace vbl
