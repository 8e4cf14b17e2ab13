// Exercises the shared library through its C header only.
#include <cstring>
#include <string>

#include "cilayer.h"
#include "doctest.h"

TEST_CASE("c api: design-scalar request") {
  const char* req = R"({"source": {"kind": "uniform", "a": 0, "b": 6},
    "targets": [2, 2.584962500721156], "r_common": 1, "tol": 1e-15})";
  cil_result* res = nullptr;
  REQUIRE(cil_design_scalar(req, &res) == CIL_OK);
  REQUIRE(res != nullptr);
  const std::string json = cil_result_json(res);
  CHECK(json.find("\"codebook\"") != std::string::npos);
  CHECK(std::string(cil_result_text(res)).find("transmit rate = 3.58496") != std::string::npos);
  cil_result_free(res);
}

TEST_CASE("c api: errors") {
  cil_result* res = reinterpret_cast<cil_result*>(0x1);
  CHECK(cil_sweep("{not json", &res) == CIL_ERR_CONFIG);
  CHECK(res == nullptr);
  CHECK(std::strlen(cil_last_error()) > 0);
  CHECK(cil_sweep(R"({"source": {"kind": "laplacian"}, "targets": [2, 3], "r_common_grid": [0],
                     "designer": "joint_scalar", "extra": 1})",
                  &res) == CIL_ERR_CONFIG);
  CHECK(cil_design_scalar(nullptr, &res) == CIL_ERR_ARGUMENT);
  CHECK(cil_design_scalar("{}", nullptr) == CIL_ERR_ARGUMENT);
  CHECK(cil_audit(R"({"codebook_path": "/nonexistent.json", "training_csv": "x.csv"})", &res) == CIL_ERR_IO);
  CHECK(std::string(cil_status_string(CIL_ERR_NUMERIC)) == "numeric failure");
  CHECK(std::strlen(cil_version()) > 0);
  cil_result_free(nullptr);
}

TEST_CASE("c api: oracle check") {
  cil_result* res = nullptr;
  REQUIRE(cil_oracle_check(R"({"atoms": 5, "count": 3, "seed": 2})", &res) == CIL_OK);
  CHECK(std::string(cil_result_text(res)).find("worst gap") != std::string::npos);
  cil_result_free(res);
}
