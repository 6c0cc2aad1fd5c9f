#pragma once

#include <json.hpp>

#include "pbt/study.hpp"

namespace pbt {

using Json = nlohmann::json;

// One schema for wire messages and persisted records: field names follow the
// data model exactly (study_id, population_size, warm_start_checkpoint_path,
// ...). Optional fields are omitted when absent. Decoding throws
// std::invalid_argument on malformed input.

Json to_json(const ParameterSpec& spec);
Json to_json(const StudyConfig& config);
Json to_json(const Measurement& m);
Json to_json(const Trial& trial);
Json to_json(const HParamValue& value);
Json to_json(const HParams& hparams);

ParameterSpec parameter_spec_from_json(const Json& j);
StudyConfig study_config_from_json(const Json& j);
Measurement measurement_from_json(const Json& j);
Trial trial_from_json(const Json& j);
HParamValue hparam_value_from_json(const Json& j);
HParams hparams_from_json(const Json& j);

std::string to_string(FitnessMode mode);
std::string to_string(Direction dir);
std::string to_string(OpponentStrategy strategy);
std::string to_string(TrialStatus status);
std::string to_string(ParamKind kind);
std::string to_string(Scale scale);

FitnessMode fitness_mode_from_string(const std::string& s);
Direction direction_from_string(const std::string& s);
OpponentStrategy opponent_strategy_from_string(const std::string& s);
TrialStatus trial_status_from_string(const std::string& s);
ParamKind param_kind_from_string(const std::string& s);
Scale scale_from_string(const std::string& s);

}  // namespace pbt
