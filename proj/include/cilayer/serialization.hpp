#pragma once

#include <string>

#include <json.hpp>

#include "cilayer/layered_scalar.hpp"
#include "cilayer/layered_vq.hpp"
#include "cilayer/quantizer_core.hpp"
#include "cilayer/rd_harness.hpp"
#include "cilayer/regularity.hpp"

namespace cilayer {

using Json = nlohmann::json;

// Infinite values are written as the strings "inf" and "-inf".
Json number_to_json(double v);
double number_from_json(const Json& j);

Json to_json(const CostWeights& w);
CostWeights weights_from_json(const Json& j);

Json to_json(const RDRecord& r);

Json to_json(const ScalarQuantizer& q);
ScalarQuantizer scalar_quantizer_from_json(const Json& j);

Json to_json(const LayeredScalarCodebook& cb);
LayeredScalarCodebook layered_scalar_from_json(const Json& j);

// Node tree mirroring the packet topology.
Json to_json(const LayeredVQCodebook& cb);
LayeredVQCodebook layered_vq_from_json(const Json& j);

Json to_json(const SourceSpec& s);
SourceSpec source_spec_from_json(const Json& j);

// Keys follow the SweepConfig fields; source, targets, r_common_grid and
// designer are required.
SweepConfig sweep_config_from_json(const Json& j);
Json to_json(const SweepConfig& c);
Json to_json(const SweepResult& r);

Json to_json(const AuditReport& r);

// One point per line, comma separated; blank lines and lines starting with
// '#' are skipped.
TrainingSet read_training_csv(const std::string& path);
void write_training_csv(const TrainingSet& s, const std::string& path);

Json parse_json(const std::string& text);
Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace cilayer
