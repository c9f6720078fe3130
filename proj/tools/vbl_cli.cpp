// vbl: command-line front end over the C API.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vbl/vbl.h"

namespace {

struct Problem {
  vbl_problem* p = nullptr;
  ~Problem() { vbl_problem_free(p); }
};

struct Result {
  vbl_result* r = nullptr;
  ~Result() { vbl_result_free(r); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual bound levels in spectral gaps of perturbed periodic operators"};
  app.set_version_flag("--version", std::string(vbl_version()));
  std::string config_path, out_dir = ".";
  int threads = 1;
  app.add_option("--config", config_path, "JSON problem config (default: d=1, V=0, unit box W)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory for CSV/JSON artifacts")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads; 0 = hardware concurrency, 1 = deterministic")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.require_subcommand(1, 1);
  app.fallthrough();
  const std::vector<std::pair<const char*, const char*>> commands{
      {"bands", "Band energies on the momentum grid (bands.csv)"},
      {"gap", "Selected spectral gap and its edges (gap.json)"},
      {"edge", "Edge extrema, masses and the Gram model (edge.json)"},
      {"predict", "Leading-order gap eigenvalues per coupling (predict.csv)"},
      {"pencil", "Birman-Schwinger branches and pencil roots (pencil_branches.csv, pencil_roots.csv)"},
      {"oracle", "Direct eigenvalues of the truncated perturbed operator (oracle.csv)"},
      {"compare", "Prediction vs pencil vs oracle with verdicts (compare.csv, verdict.json)"},
      {"green-check", "Green-function and structural invariants (green_check.json)"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  if (vbl_set_threads(threads) != VBL_OK) {
    std::fprintf(stderr, "error: %s\n", vbl_last_error());
    return 2;
  }
  Problem problem;
  const vbl_status ps =
      config_path.empty() ? vbl_problem_default(&problem.p) : vbl_problem_from_file(config_path.c_str(), &problem.p);
  if (ps != VBL_OK) {
    std::fprintf(stderr, "config error: %s\n", vbl_last_error());
    return 2;
  }
  Result result;
  const vbl_status rs = vbl_run(problem.p, command.c_str(), out_dir.c_str(), &result.r);
  if (result.r) {
    for (std::size_t i = 0; i < vbl_result_artifact_count(result.r); ++i)
      std::printf("wrote %s\n", vbl_result_artifact(result.r, i));
  }
  switch (rs) {
    case VBL_OK:
      return 0;
    case VBL_ERR_CONFIG:
    case VBL_ERR_INVALID_ARGUMENT:
      std::fprintf(stderr, "config error: %s\n", vbl_last_error());
      return 2;
    case VBL_ERR_NUMERICAL:
      std::fprintf(stderr, "numerical verification failed: %s\n", vbl_last_error());
      return 3;
    default:
      std::fprintf(stderr, "error: %s\n", vbl_last_error());
      return 1;
  }
}
