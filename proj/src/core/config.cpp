#include "vbl/config.hpp"

#include <cmath>
#include <initializer_list>
#include <set>

#include "json.hpp"
#include "vbl/errors.hpp"
#include "vbl/fiber.hpp"

namespace vbl {

using json = nlohmann::json;

namespace {

std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

[[noreturn]] void fail(const std::string& ptr, const std::string& what) {
  throw ConfigError((ptr.empty() ? std::string("/") : ptr) + ": " + what);
}

void expect_object(const json& j, const std::string& ptr, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(ptr, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) fail(child(ptr, k), "unknown key");
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

const json& require(const json& j, const std::string& ptr, const char* key) {
  const json* v = find(j, key);
  if (!v) fail(child(ptr, key), "missing required key");
  return *v;
}

double as_number(const json& v, const std::string& ptr) {
  if (!v.is_number()) fail(ptr, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(ptr, "expected a finite number");
  return x;
}

int as_int(const json& v, const std::string& ptr) {
  if (!v.is_number_integer()) fail(ptr, "expected an integer");
  return v.get<int>();
}

std::string as_string(const json& v, const std::string& ptr) {
  if (!v.is_string()) fail(ptr, "expected a string");
  return v.get<std::string>();
}

double number_or(const json& j, const std::string& ptr, const char* key, double fallback) {
  const json* v = find(j, key);
  return v ? as_number(*v, child(ptr, key)) : fallback;
}

int int_or(const json& j, const std::string& ptr, const char* key, int fallback) {
  const json* v = find(j, key);
  return v ? as_int(*v, child(ptr, key)) : fallback;
}

double positive_or(const json& j, const std::string& ptr, const char* key, double fallback) {
  const double x = number_or(j, ptr, key, fallback);
  if (!(x > 0.0)) fail(child(ptr, key), "must be positive");
  return x;
}

int positive_int_or(const json& j, const std::string& ptr, const char* key, int fallback, int minimum = 1) {
  const int x = int_or(j, ptr, key, fallback);
  if (x < minimum) fail(child(ptr, key), "must be at least " + std::to_string(minimum));
  return x;
}

Point point_of(const json& v, const std::string& ptr, int d) {
  if (!v.is_array() || static_cast<int>(v.size()) != d)
    fail(ptr, "expected an array of " + std::to_string(d) + " numbers");
  Point p{};
  for (int i = 0; i < d; ++i) p[i] = as_number(v[i], child(ptr, static_cast<std::size_t>(i)));
  return p;
}

Freq freq_of(const json& v, const std::string& ptr, int d) {
  if (!v.is_array() || static_cast<int>(v.size()) != d)
    fail(ptr, "expected an array of " + std::to_string(d) + " integers");
  Freq m{};
  for (int i = 0; i < d; ++i) m[i] = as_int(v[i], child(ptr, static_cast<std::size_t>(i)));
  return m;
}

json point_json(const Point& p, int d) {
  json a = json::array();
  for (int i = 0; i < d; ++i) a.push_back(p[i]);
  return a;
}

json freq_json(const Freq& m, int d) {
  json a = json::array();
  for (int i = 0; i < d; ++i) a.push_back(m[i]);
  return a;
}

template <class F>
auto wrap(const std::string& ptr, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    fail(ptr, e.what());
  }
}

PotentialSpec parse_potential(const json& j, const std::string& ptr, int d, json& out) {
  if (!j.is_object()) fail(ptr, "expected an object");
  const std::string kind = as_string(require(j, ptr, "kind"), child(ptr, "kind"));
  out = json::object();
  out["kind"] = kind;
  if (kind == "zero") {
    expect_object(j, ptr, {"kind"});
    return PotentialSpec::zero(d);
  }
  if (kind == "cosine") {
    expect_object(j, ptr, {"kind", "terms"});
    const std::string tp = child(ptr, "terms");
    const json& terms = require(j, ptr, "terms");
    if (!terms.is_array()) fail(tp, "expected an array");
    std::vector<PotentialSpec::CosineTerm> ts;
    out["terms"] = json::array();
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const std::string ip = child(tp, i);
      expect_object(terms[i], ip, {"m", "amplitude"});
      PotentialSpec::CosineTerm t;
      t.m = freq_of(require(terms[i], ip, "m"), child(ip, "m"), d);
      t.amplitude = as_number(require(terms[i], ip, "amplitude"), child(ip, "amplitude"));
      ts.push_back(t);
      out["terms"].push_back({{"m", freq_json(t.m, d)}, {"amplitude", t.amplitude}});
    }
    return wrap(ptr, [&] { return PotentialSpec::cosine_sum(d, ts); });
  }
  if (kind == "fourier") {
    expect_object(j, ptr, {"kind", "coefficients"});
    const std::string cp = child(ptr, "coefficients");
    const json& cs = require(j, ptr, "coefficients");
    if (!cs.is_array()) fail(cp, "expected an array");
    std::map<Freq, cplx> coeffs;
    out["coefficients"] = json::array();
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string ip = child(cp, i);
      expect_object(cs[i], ip, {"m", "re", "im"});
      const Freq m = freq_of(require(cs[i], ip, "m"), child(ip, "m"), d);
      const cplx c(number_or(cs[i], ip, "re", 0.0), number_or(cs[i], ip, "im", 0.0));
      if (coeffs.count(m)) fail(ip, "duplicate frequency");
      coeffs[m] = c;
      out["coefficients"].push_back({{"m", freq_json(m, d)}, {"re", c.real()}, {"im", c.imag()}});
    }
    return wrap(ptr, [&] { return PotentialSpec::fourier(d, coeffs); });
  }
  fail(child(ptr, "kind"), "unknown potential kind '" + kind + "' (zero, cosine, fourier)");
}

Bump parse_bump(const json& j, const std::string& ptr, int d, const std::string& shape, json& out) {
  Bump b;
  b.center = Point{};
  if (const json* c = find(j, "center")) b.center = point_of(*c, child(ptr, "center"), d);
  b.amplitude = number_or(j, ptr, "amplitude", 1.0);
  if (shape == "box") {
    b.shape = BumpShape::box;
    b.widths = {0.5, 0.5, 0.5};
    if (const json* w = find(j, "half_widths")) b.widths = point_of(*w, child(ptr, "half_widths"), d);
    for (int i = d; i < 3; ++i) b.widths[i] = 0.5;
    out["half_widths"] = point_json(b.widths, d);
  } else {
    b.shape = BumpShape::gaussian;
    const double s = positive_or(j, ptr, "sigma", 1.0);
    b.widths = {s, s, s};
    out["sigma"] = s;
  }
  out["center"] = point_json(b.center, d);
  out["amplitude"] = b.amplitude;
  return b;
}

PerturbationSpec parse_perturbation(const json& j, const std::string& ptr, int d, json& out) {
  if (!j.is_object()) fail(ptr, "expected an object");
  const std::string kind = as_string(require(j, ptr, "kind"), child(ptr, "kind"));
  out = json::object();
  out["kind"] = kind;
  std::vector<Bump> bumps;
  if (kind == "box") {
    expect_object(j, ptr, {"kind", "center", "half_widths", "amplitude"});
    bumps.push_back(parse_bump(j, ptr, d, "box", out));
  } else if (kind == "gaussian") {
    expect_object(j, ptr, {"kind", "center", "sigma", "amplitude"});
    bumps.push_back(parse_bump(j, ptr, d, "gaussian", out));
  } else if (kind == "sum" || kind == "signed_sum") {
    expect_object(j, ptr, {"kind", "components"});
    const std::string cp = child(ptr, "components");
    const json& cs = require(j, ptr, "components");
    if (!cs.is_array() || cs.empty()) fail(cp, "expected a non-empty array");
    out["components"] = json::array();
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string ip = child(cp, i);
      if (!cs[i].is_object()) fail(ip, "expected an object");
      const std::string shape = as_string(require(cs[i], ip, "shape"), child(ip, "shape"));
      json o = {{"shape", shape}};
      if (shape == "box")
        expect_object(cs[i], ip, {"shape", "center", "half_widths", "amplitude"});
      else if (shape == "gaussian")
        expect_object(cs[i], ip, {"shape", "center", "sigma", "amplitude"});
      else
        fail(child(ip, "shape"), "unknown shape '" + shape + "' (box, gaussian)");
      bumps.push_back(parse_bump(cs[i], ip, d, shape, o));
      out["components"].push_back(o);
    }
  } else {
    fail(child(ptr, "kind"), "unknown perturbation kind '" + kind + "' (box, gaussian, sum, signed_sum)");
  }
  return wrap(ptr, [&] { return PerturbationSpec(d, kind, bumps); });
}

SyntheticSpec parse_synthetic(const json& j, const std::string& ptr, int d, json& out) {
  if (!j.is_object()) fail(ptr, "expected an object");
  if (d == 1) fail(ptr, "synthetic dispersions need dimension 2 or 3");
  SyntheticSpec s;
  s.kind = as_string(require(j, ptr, "kind"), child(ptr, "kind"));
  if (s.kind == "radial_well") {
    expect_object(j, ptr, {"kind", "k0", "alpha", "c"});
    s.k0 = number_or(j, ptr, "k0", 1.0);
    if (s.k0 < 0.0) fail(child(ptr, "k0"), "must be non-negative");
    s.alpha = positive_or(j, ptr, "alpha", 1.0);
    s.c = number_or(j, ptr, "c", 0.0);
    out = {{"kind", s.kind}, {"k0", s.k0}, {"alpha", s.alpha}, {"c", s.c}};
  } else if (s.kind == "circle_well_3d") {
    expect_object(j, ptr, {"kind", "radius"});
    if (d != 3) fail(child(ptr, "kind"), "circle_well_3d needs dimension 3");
    s.radius = positive_or(j, ptr, "radius", 1.0);
    out = {{"kind", s.kind}, {"radius", s.radius}};
  } else {
    fail(child(ptr, "kind"), "unknown synthetic kind '" + s.kind + "' (radial_well, circle_well_3d)");
  }
  return s;
}

Numerics parse_numerics(const json& j, const std::string& ptr, json& out) {
  expect_object(j, ptr,
                {"cutoff", "band_grid", "n_bands", "cell_grid", "gap_tol", "refine_tol", "simple_tol", "morse_tol",
                 "hessian_step", "geometry", "h", "L_min", "L_cap", "rank_tol", "lambda_points",
                 "degenerate_samples", "channels", "kspace_finest"});
  Numerics n;
  n.cutoff = int_or(j, ptr, "cutoff", 0);
  if (n.cutoff < 0) fail(child(ptr, "cutoff"), "must be non-negative");
  n.band_grid = int_or(j, ptr, "band_grid", 0);
  if (n.band_grid < 0) fail(child(ptr, "band_grid"), "must be non-negative");
  n.n_bands = int_or(j, ptr, "n_bands", 0);
  if (n.n_bands < 0) fail(child(ptr, "n_bands"), "must be non-negative");
  n.cell_grid = positive_int_or(j, ptr, "cell_grid", n.cell_grid, 4);
  n.tol.gap_tol = positive_or(j, ptr, "gap_tol", n.tol.gap_tol);
  n.tol.refine_tol = positive_or(j, ptr, "refine_tol", n.tol.refine_tol);
  n.tol.simple_tol = positive_or(j, ptr, "simple_tol", n.tol.simple_tol);
  n.tol.morse_tol = positive_or(j, ptr, "morse_tol", n.tol.morse_tol);
  n.tol.hessian_step = positive_or(j, ptr, "hessian_step", n.tol.hessian_step);
  if (const json* g = find(j, "geometry")) {
    const std::string s = as_string(*g, child(ptr, "geometry"));
    if (s == "box")
      n.geometry = Geometry::box;
    else if (s == "radial")
      n.geometry = Geometry::radial;
    else
      fail(child(ptr, "geometry"), "expected 'box' or 'radial'");
  }
  n.h = positive_or(j, ptr, "h", n.h);
  n.L_min = positive_or(j, ptr, "L_min", n.L_min);
  n.L_cap = positive_or(j, ptr, "L_cap", n.L_cap);
  if (n.L_cap < n.L_min) fail(child(ptr, "L_cap"), "must be at least L_min");
  n.rank_tol = positive_or(j, ptr, "rank_tol", n.rank_tol);
  n.lambda_points = positive_int_or(j, ptr, "lambda_points", n.lambda_points, 2);
  n.degenerate_samples = positive_int_or(j, ptr, "degenerate_samples", n.degenerate_samples, 8);
  n.channels = positive_int_or(j, ptr, "channels", n.channels);
  n.kspace_finest = positive_or(j, ptr, "kspace_finest", n.kspace_finest);
  out = {{"cutoff", n.cutoff},
         {"band_grid", n.band_grid},
         {"n_bands", n.n_bands},
         {"cell_grid", n.cell_grid},
         {"gap_tol", n.tol.gap_tol},
         {"refine_tol", n.tol.refine_tol},
         {"simple_tol", n.tol.simple_tol},
         {"morse_tol", n.tol.morse_tol},
         {"hessian_step", n.tol.hessian_step},
         {"geometry", n.geometry == Geometry::box ? "box" : "radial"},
         {"h", n.h},
         {"L_min", n.L_min},
         {"L_cap", n.L_cap},
         {"rank_tol", n.rank_tol},
         {"lambda_points", n.lambda_points},
         {"degenerate_samples", n.degenerate_samples},
         {"channels", n.channels},
         {"kspace_finest", n.kspace_finest}};
  return n;
}

}  // namespace

SyntheticDispersion SyntheticSpec::dispersion(int d) const {
  if (kind == "circle_well_3d") return SyntheticDispersion::circle_well_3d(radius);
  return SyntheticDispersion::radial_well(d, k0, alpha, c);
}

int RunConfig::cutoff() const {
  return numerics.cutoff > 0 ? numerics.cutoff : std::max(default_cutoff(dimension), potential.max_frequency());
}

int RunConfig::band_grid() const {
  if (numerics.band_grid > 0) return numerics.band_grid;
  return dimension == 1 ? 32 : (dimension == 2 ? 12 : 6);
}

int RunConfig::n_bands() const { return numerics.n_bands > 0 ? numerics.n_bands : gap_index + 2; }

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("/: malformed JSON: ") + e.what());
  }
  expect_object(j, "", {"schema_version", "dimension", "potential", "perturbation", "synthetic", "gap_index",
                        "gammas", "numerics"});
  RunConfig c;
  const int version = int_or(j, "", "schema_version", kConfigSchemaVersion);
  if (version != kConfigSchemaVersion)
    fail("/schema_version", "unsupported schema version " + std::to_string(version));
  c.dimension = as_int(require(j, "", "dimension"), "/dimension");
  if (c.dimension < 1 || c.dimension > 3) fail("/dimension", "must be 1, 2 or 3");
  const int d = c.dimension;
  json out = {{"schema_version", kConfigSchemaVersion}, {"dimension", d}};

  json pot = {{"kind", "zero"}};
  if (const json* p = find(j, "potential"))
    c.potential = parse_potential(*p, "/potential", d, pot);
  else
    c.potential = PotentialSpec::zero(d);
  out["potential"] = pot;

  json pert;
  c.perturbation = parse_perturbation(require(j, "", "perturbation"), "/perturbation", d, pert);
  out["perturbation"] = pert;

  if (const json* s = find(j, "synthetic")) {
    json syn;
    c.synthetic = parse_synthetic(*s, "/synthetic", d, syn);
    if (c.potential.kind() != "zero" && !c.potential.coefficients().empty())
      fail("/synthetic", "a synthetic dispersion replaces the periodic potential; remove /potential");
    out["synthetic"] = syn;
  }

  c.gap_index = int_or(j, "", "gap_index", 0);
  if (c.gap_index < 0) fail("/gap_index", "must be non-negative");
  out["gap_index"] = c.gap_index;

  if (const json* g = find(j, "gammas")) {
    if (!g->is_array() || g->empty()) fail("/gammas", "expected a non-empty array of numbers");
    c.gammas.clear();
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double x = as_number((*g)[i], child("/gammas", i));
      if (x == 0.0) fail(child("/gammas", i), "coupling must be nonzero");
      c.gammas.push_back(x);
    }
  }
  out["gammas"] = c.gammas;

  json num;
  c.numerics = parse_numerics(find(j, "numerics") ? j["numerics"] : json::object(), "/numerics", num);
  if (c.numerics.geometry == Geometry::radial && d == 1) fail("/numerics/geometry", "radial geometry needs d = 2 or 3");
  out["numerics"] = num;
  if (c.numerics.cutoff > 0 && c.numerics.cutoff < c.potential.max_frequency())
    fail("/numerics/cutoff", "below the highest frequency of the potential");

  c.normalized = out.dump(2);
  return c;
}

RunConfig default_config() {
  return parse_config(R"({"dimension": 1, "perturbation": {"kind": "box"}})");
}

}  // namespace vbl
