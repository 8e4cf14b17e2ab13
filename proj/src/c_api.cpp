#include "cilayer.h"

#include <new>
#include <string>

#include "cilayer/error.hpp"
#include "cilayer/requests.hpp"

struct cil_result {
  std::string json;
  std::string text;
  std::string csv;
};

namespace {

thread_local std::string last_error;

cil_status status_of(cilayer::ErrorCode code) {
  using cilayer::ErrorCode;
  if (code == ErrorCode::Io) return CIL_ERR_IO;
  return cilayer::is_numeric_failure(code) ? CIL_ERR_NUMERIC : CIL_ERR_CONFIG;
}

template <class Fn>
cil_status run(const char* request, cil_result** out, Fn fn) {
  if (out == nullptr) {
    last_error = "output pointer is null";
    return CIL_ERR_ARGUMENT;
  }
  *out = nullptr;
  if (request == nullptr) {
    last_error = "request is null";
    return CIL_ERR_ARGUMENT;
  }
  last_error.clear();
  try {
    const cilayer::RequestOutput r = fn(cilayer::parse_json(request));
    *out = new cil_result{r.json.dump(2), r.text, r.csv};
    return CIL_OK;
  } catch (const cilayer::Error& e) {
    last_error = std::string(cilayer::error_code_name(e.code())) + ": " + e.what();
    return status_of(e.code());
  } catch (const cilayer::Json::exception& e) {
    last_error = std::string("json: ") + e.what();
    return CIL_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return CIL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CIL_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* cil_version(void) { return "0.1.0"; }

const char* cil_status_string(cil_status status) {
  switch (status) {
    case CIL_OK: return "ok";
    case CIL_ERR_CONFIG: return "invalid configuration";
    case CIL_ERR_NUMERIC: return "numeric failure";
    case CIL_ERR_IO: return "i/o error";
    case CIL_ERR_INTERNAL: return "internal error";
    case CIL_ERR_ARGUMENT: return "invalid argument";
  }
  return "unknown status";
}

const char* cil_last_error(void) { return last_error.c_str(); }

cil_status cil_design_scalar(const char* request_json, cil_result** out) {
  return run(request_json, out, cilayer::run_design_scalar);
}
cil_status cil_design_fast(const char* request_json, cil_result** out) {
  return run(request_json, out, cilayer::run_design_fast);
}
cil_status cil_design_vq(const char* request_json, cil_result** out) {
  return run(request_json, out, cilayer::run_design_vq);
}
cil_status cil_sweep(const char* config_json, cil_result** out) {
  return run(config_json, out, cilayer::run_sweep);
}
cil_status cil_oracle_check(const char* request_json, cil_result** out) {
  return run(request_json, out, cilayer::run_oracle_check);
}
cil_status cil_audit(const char* request_json, cil_result** out) {
  return run(request_json, out, cilayer::run_audit);
}

const char* cil_result_json(const cil_result* result) { return result ? result->json.c_str() : ""; }
const char* cil_result_text(const cil_result* result) { return result ? result->text.c_str() : ""; }
const char* cil_result_csv(const cil_result* result) { return result ? result->csv.c_str() : ""; }

cil_status cil_result_write_json(const cil_result* result, const char* path) {
  if (result == nullptr || path == nullptr) {
    last_error = "null argument";
    return CIL_ERR_ARGUMENT;
  }
  try {
    cilayer::write_text_file(path, result->json + '\n');
    return CIL_OK;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CIL_ERR_IO;
  }
}

void cil_result_free(cil_result* result) { delete result; }

}  // extern "C"
