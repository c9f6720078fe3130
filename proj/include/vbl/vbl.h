#ifndef VBL_VBL_H
#define VBL_VBL_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(VBL_BUILDING)
#define VBL_API __declspec(dllexport)
#else
#define VBL_API __declspec(dllimport)
#endif
#else
#define VBL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vbl_status {
  VBL_OK = 0,
  VBL_ERR_INVALID_ARGUMENT = 1, /* null pointer, unknown command */
  VBL_ERR_CONFIG = 2,           /* malformed or unsupported config */
  VBL_ERR_NUMERICAL = 3,        /* solver failure or failed numerical verification */
  VBL_ERR_IO = 4,
  VBL_ERR_INTERNAL = 5
} vbl_status;

typedef struct vbl_problem vbl_problem;
typedef struct vbl_result vbl_result;

/* Library version, e.g. "0.1.0". */
VBL_API const char* vbl_version(void);

/* Message of the last failed call on this thread; empty when none. Valid until the next call. */
VBL_API const char* vbl_last_error(void);

/* Problems are immutable once created. */
VBL_API vbl_status vbl_problem_from_json(const char* json_text, vbl_problem** out);
VBL_API vbl_status vbl_problem_from_file(const char* path, vbl_problem** out);
VBL_API vbl_status vbl_problem_default(vbl_problem** out);
/* Config with defaults filled in, as JSON. Owned by the problem. */
VBL_API const char* vbl_problem_normalized(const vbl_problem* problem);
VBL_API void vbl_problem_free(vbl_problem* problem);

/* Worker threads for all later runs; 0 selects the hardware concurrency, 1 is deterministic. */
VBL_API vbl_status vbl_set_threads(int n);

/* Space-separated list of command names. */
VBL_API const char* vbl_commands(void);

/* Runs a command, writing its artifacts and manifest.json into out_dir. When the command completes
 * but one of its numerical verifications fails, *out is set and VBL_ERR_NUMERICAL is returned. */
VBL_API vbl_status vbl_run(const vbl_problem* problem, const char* command, const char* out_dir, vbl_result** out);

VBL_API int vbl_result_verified(const vbl_result* result);
VBL_API size_t vbl_result_artifact_count(const vbl_result* result);
/* NULL when index is out of range. */
VBL_API const char* vbl_result_artifact(const vbl_result* result, size_t index);
VBL_API const char* vbl_result_manifest(const vbl_result* result);
VBL_API void vbl_result_free(vbl_result* result);

#ifdef __cplusplus
}
#endif

#endif
