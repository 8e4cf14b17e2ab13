#ifndef CILAYER_H
#define CILAYER_H

#include <stddef.h>

#if defined(CILAYER_BUILDING_LIBRARY)
#define CIL_API __attribute__((visibility("default")))
#else
#define CIL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cil_status {
  CIL_OK = 0,
  CIL_ERR_CONFIG = 1,
  CIL_ERR_NUMERIC = 2,
  CIL_ERR_IO = 3,
  CIL_ERR_INTERNAL = 4,
  CIL_ERR_ARGUMENT = 5
} cil_status;

/* Result of a request: a JSON document, a text summary and (for sweeps) CSV.
   Owned by the caller, released with cil_result_free. */
typedef struct cil_result cil_result;

CIL_API const char* cil_version(void);
CIL_API const char* cil_status_string(cil_status status);

/* Message of the last failure on the calling thread, "" if none. */
CIL_API const char* cil_last_error(void);

/* All requests take a JSON object as a NUL-terminated string. On success
   *out receives a new result; on failure *out is set to NULL. */
CIL_API cil_status cil_design_scalar(const char* request_json, cil_result** out);
CIL_API cil_status cil_design_fast(const char* request_json, cil_result** out);
CIL_API cil_status cil_design_vq(const char* request_json, cil_result** out);
CIL_API cil_status cil_sweep(const char* config_json, cil_result** out);
CIL_API cil_status cil_oracle_check(const char* request_json, cil_result** out);
CIL_API cil_status cil_audit(const char* request_json, cil_result** out);

/* Borrowed strings, valid until the result is freed. */
CIL_API const char* cil_result_json(const cil_result* result);
CIL_API const char* cil_result_text(const cil_result* result);
CIL_API const char* cil_result_csv(const cil_result* result);

CIL_API cil_status cil_result_write_json(const cil_result* result, const char* path);
CIL_API void cil_result_free(cil_result* result);

#ifdef __cplusplus
}
#endif

#endif
