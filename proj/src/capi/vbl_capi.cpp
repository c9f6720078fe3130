#include "vbl/vbl.h"

#include <exception>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "vbl/config.hpp"
#include "vbl/driver.hpp"
#include "vbl/errors.hpp"
#include "vbl/parallel.hpp"
#include "vbl/version.hpp"

struct vbl_problem {
  vbl::RunConfig config;
};

struct vbl_result {
  vbl::RunReport report;
};

namespace {

thread_local std::string last_error;

vbl_status fail(vbl_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

// Maps the library exception hierarchy onto status codes.
template <class F>
vbl_status guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const vbl::ConfigError& e) {
    return fail(VBL_ERR_CONFIG, e.what());
  } catch (const vbl::NumericalError& e) {
    return fail(VBL_ERR_NUMERICAL, e.what());
  } catch (const vbl::InvalidArgument& e) {
    return fail(VBL_ERR_CONFIG, e.what());
  } catch (const vbl::Error& e) {
    return fail(VBL_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(VBL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(VBL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(VBL_ERR_INTERNAL, "unknown exception");
  }
}

vbl_status make_problem(vbl::RunConfig cfg, vbl_problem** out) {
  *out = new vbl_problem{std::move(cfg)};
  return VBL_OK;
}

}  // namespace

extern "C" {

const char* vbl_version(void) { return vbl::kVersion; }

const char* vbl_last_error(void) { return last_error.c_str(); }

vbl_status vbl_problem_from_json(const char* json_text, vbl_problem** out) {
  if (!json_text || !out) return fail(VBL_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { return make_problem(vbl::parse_config(json_text), out); });
}

vbl_status vbl_problem_from_file(const char* path, vbl_problem** out) {
  if (!path || !out) return fail(VBL_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  std::ifstream f(path, std::ios::binary);
  if (!f) return fail(VBL_ERR_CONFIG, std::string("cannot read config file ") + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return guarded([&] { return make_problem(vbl::parse_config(ss.str()), out); });
}

vbl_status vbl_problem_default(vbl_problem** out) {
  if (!out) return fail(VBL_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { return make_problem(vbl::default_config(), out); });
}

const char* vbl_problem_normalized(const vbl_problem* problem) {
  return problem ? problem->config.normalized.c_str() : nullptr;
}

void vbl_problem_free(vbl_problem* problem) { delete problem; }

vbl_status vbl_set_threads(int n) {
  if (n < 0) return fail(VBL_ERR_INVALID_ARGUMENT, "thread count must be non-negative");
  return guarded([&] {
    vbl::set_thread_count(n);
    return VBL_OK;
  });
}

const char* vbl_commands(void) {
  static const std::string list = [] {
    std::string s;
    for (const auto& c : vbl::command_names()) s += (s.empty() ? "" : " ") + c;
    return s;
  }();
  return list.c_str();
}

vbl_status vbl_run(const vbl_problem* problem, const char* command, const char* out_dir, vbl_result** out) {
  if (!problem || !command || !out_dir || !out) return fail(VBL_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  bool known = false;
  for (const auto& c : vbl::command_names()) known = known || c == command;
  if (!known) return fail(VBL_ERR_INVALID_ARGUMENT, std::string("unknown command '") + command + "'");
  return guarded([&] {
    auto* r = new vbl_result{vbl::run_command(command, problem->config, out_dir)};
    *out = r;
    if (!r->report.verified) return fail(VBL_ERR_NUMERICAL, std::string(command) + ": numerical verification failed");
    return VBL_OK;
  });
}

int vbl_result_verified(const vbl_result* result) { return result && result->report.verified ? 1 : 0; }

size_t vbl_result_artifact_count(const vbl_result* result) { return result ? result->report.artifacts.size() : 0; }

const char* vbl_result_artifact(const vbl_result* result, size_t index) {
  if (!result || index >= result->report.artifacts.size()) return nullptr;
  return result->report.artifacts[index].c_str();
}

const char* vbl_result_manifest(const vbl_result* result) {
  return result ? result->report.manifest.c_str() : nullptr;
}

void vbl_result_free(vbl_result* result) { delete result; }

}  // extern "C"
