#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vbl/bands.hpp"
#include "vbl/lattice.hpp"

namespace vbl {

constexpr int kConfigSchemaVersion = 1;

enum class Geometry { box, radial };

/// Numerical parameters; every field has a default.
struct Numerics {
  int cutoff = 0;      // plane-wave cutoff, 0 selects default_cutoff(d)
  int band_grid = 0;   // momentum points per axis, 0 selects 32 / 12 / 6 for d = 1 / 2 / 3
  int n_bands = 0;     // bands swept, 0 selects gap_index + 2
  int cell_grid = 64;  // Bloch function samples per axis on the unit cell
  EdgeTolerances tol;
  Geometry geometry = Geometry::box;
  double h = 1.0 / 64;
  double L_min = 40.0;
  double L_cap = 40000.0;
  double rank_tol = 1e-8;
  int lambda_points = 21;
  int degenerate_samples = 64;
  int channels = 8;
  double kspace_finest = 1e-7;
};

struct SyntheticSpec {
  std::string kind;  // radial_well or circle_well_3d
  double k0 = 1.0;
  double alpha = 1.0;
  double c = 0.0;
  double radius = 1.0;

  SyntheticDispersion dispersion(int d) const;
};

struct RunConfig {
  int dimension = 1;
  PotentialSpec potential = PotentialSpec::zero(1);
  PerturbationSpec perturbation = PerturbationSpec::box(1, {0, 0, 0}, {0.5, 0.5, 0.5});
  std::optional<SyntheticSpec> synthetic;
  int gap_index = 0;
  std::vector<double> gammas{-0.2, -0.1, -0.05};
  Numerics numerics;
  std::string normalized;  // JSON of the full config with defaults filled in

  int cutoff() const;
  int band_grid() const;
  int n_bands() const;
};

/// Parses and validates a config document. Throws ConfigError naming the offending JSON pointer.
RunConfig parse_config(const std::string& text);

/// d=1, V = 0, unit box W, gammas -0.2, -0.1, -0.05.
RunConfig default_config();

}  // namespace vbl
