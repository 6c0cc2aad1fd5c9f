#include "pbt/json_codec.hpp"

#include <stdexcept>

namespace pbt {

namespace {

[[noreturn]] void bad(const std::string& what) {
    throw std::invalid_argument("decode error: " + what);
}

template <typename T>
T require(const Json& j, const char* key) {
    if (!j.contains(key)) bad(std::string("missing field ") + key);
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        bad(std::string("bad type for field ") + key);
    }
}

template <typename T>
std::optional<T> maybe(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

}  // namespace

std::string to_string(FitnessMode mode) {
    return mode == FitnessMode::kPriority ? "priority" : "dominance";
}
std::string to_string(Direction dir) {
    return dir == Direction::kMinimize ? "minimize" : "maximize";
}
std::string to_string(OpponentStrategy strategy) {
    switch (strategy) {
        case OpponentStrategy::kPastGeneration: return "past_generation";
        case OpponentStrategy::kSameGeneration: return "same_generation";
        case OpponentStrategy::kAnyGeneration: return "any_generation";
    }
    return "past_generation";
}
std::string to_string(TrialStatus status) {
    switch (status) {
        case TrialStatus::kPending: return "pending";
        case TrialStatus::kCompleted: return "completed";
        case TrialStatus::kStopped: return "stopped";
    }
    return "pending";
}
std::string to_string(ParamKind kind) {
    switch (kind) {
        case ParamKind::kInteger: return "integer";
        case ParamKind::kFloat: return "float";
        case ParamKind::kDiscrete: return "discrete";
        case ParamKind::kCategorical: return "categorical";
    }
    return "float";
}
std::string to_string(Scale scale) {
    return scale == Scale::kLinear ? "linear" : "log";
}

FitnessMode fitness_mode_from_string(const std::string& s) {
    if (s == "priority") return FitnessMode::kPriority;
    if (s == "dominance") return FitnessMode::kDominance;
    bad("fitness_mode " + s);
}
Direction direction_from_string(const std::string& s) {
    if (s == "minimize") return Direction::kMinimize;
    if (s == "maximize") return Direction::kMaximize;
    bad("direction " + s);
}
OpponentStrategy opponent_strategy_from_string(const std::string& s) {
    if (s == "past_generation") return OpponentStrategy::kPastGeneration;
    if (s == "same_generation") return OpponentStrategy::kSameGeneration;
    if (s == "any_generation") return OpponentStrategy::kAnyGeneration;
    bad("opponent_strategy " + s);
}
TrialStatus trial_status_from_string(const std::string& s) {
    if (s == "pending") return TrialStatus::kPending;
    if (s == "completed") return TrialStatus::kCompleted;
    if (s == "stopped") return TrialStatus::kStopped;
    bad("status " + s);
}
ParamKind param_kind_from_string(const std::string& s) {
    if (s == "integer") return ParamKind::kInteger;
    if (s == "float") return ParamKind::kFloat;
    if (s == "discrete") return ParamKind::kDiscrete;
    if (s == "categorical") return ParamKind::kCategorical;
    bad("kind " + s);
}
Scale scale_from_string(const std::string& s) {
    if (s == "linear") return Scale::kLinear;
    if (s == "log") return Scale::kLog;
    bad("scale " + s);
}

Json to_json(const HParamValue& value) {
    if (std::holds_alternative<std::int64_t>(value)) return std::get<std::int64_t>(value);
    if (std::holds_alternative<double>(value)) return std::get<double>(value);
    return std::get<std::string>(value);
}

HParamValue hparam_value_from_json(const Json& j) {
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    bad("hparam value must be number or string");
}

Json to_json(const HParams& hparams) {
    Json j = Json::object();
    for (const auto& [name, value] : hparams) j[name] = to_json(value);
    return j;
}

HParams hparams_from_json(const Json& j) {
    HParams out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        out[it.key()] = hparam_value_from_json(it.value());
    }
    return out;
}

Json to_json(const ParameterSpec& spec) {
    Json j;
    j["name"] = spec.name;
    j["kind"] = to_string(spec.kind);
    j["mutable"] = spec.can_mutate;
    switch (spec.kind) {
        case ParamKind::kInteger:
        case ParamKind::kFloat:
            j["bounds"] = {spec.min_value, spec.max_value};
            if (spec.kind == ParamKind::kFloat) j["scale"] = to_string(spec.scale);
            break;
        case ParamKind::kDiscrete:
            j["feasible_values"] = spec.feasible_values;
            break;
        case ParamKind::kCategorical:
            j["feasible_values"] = spec.categories;
            break;
    }
    if (!spec.children.empty()) {
        Json children = Json::array();
        for (const auto& e : spec.children) {
            children.push_back({{"guard_value", e.guard_value}, {"child", e.child_name}});
        }
        j["children"] = children;
    }
    return j;
}

ParameterSpec parameter_spec_from_json(const Json& j) {
    ParameterSpec spec;
    spec.name = require<std::string>(j, "name");
    spec.kind = param_kind_from_string(require<std::string>(j, "kind"));
    spec.can_mutate = maybe<bool>(j, "mutable").value_or(true);
    switch (spec.kind) {
        case ParamKind::kInteger:
        case ParamKind::kFloat: {
            auto bounds = require<std::vector<double>>(j, "bounds");
            if (bounds.size() != 2) bad("bounds must be [min, max]");
            spec.min_value = bounds[0];
            spec.max_value = bounds[1];
            if (spec.kind == ParamKind::kFloat && j.contains("scale")) {
                spec.scale = scale_from_string(j.at("scale").get<std::string>());
            }
            break;
        }
        case ParamKind::kDiscrete:
            spec.feasible_values = require<std::vector<double>>(j, "feasible_values");
            break;
        case ParamKind::kCategorical:
            spec.categories = require<std::vector<std::string>>(j, "feasible_values");
            break;
    }
    if (j.contains("children")) {
        for (const auto& e : j.at("children")) {
            spec.children.push_back({require<std::string>(e, "guard_value"),
                                     require<std::string>(e, "child")});
        }
    }
    return spec;
}

Json to_json(const StudyConfig& config) {
    Json specs = Json::array();
    for (const auto& s : config.specs) specs.push_back(to_json(s));
    Json dirs = Json::array();
    for (auto d : config.objective_directions) dirs.push_back(to_string(d));
    return Json{{"study_id", config.study_id},
                {"specs", specs},
                {"population_size", config.population_size},
                {"worker_budget", config.worker_budget},
                {"steps_per_trial", config.steps_per_trial},
                {"fitness_mode", to_string(config.fitness_mode)},
                {"objective_directions", dirs},
                {"opponent_strategy", to_string(config.opponent_strategy)},
                {"opponent_window_k", config.opponent_window_k},
                {"seed", config.seed},
                {"max_generations", config.max_generations}};
}

StudyConfig study_config_from_json(const Json& j) {
    StudyConfig config;
    config.study_id = require<std::string>(j, "study_id");
    if (j.contains("specs")) {
        for (const auto& s : j.at("specs")) {
            config.specs.push_back(parameter_spec_from_json(s));
        }
    }
    config.population_size = require<int>(j, "population_size");
    config.worker_budget = maybe<int>(j, "worker_budget").value_or(config.population_size);
    config.steps_per_trial = require<int>(j, "steps_per_trial");
    config.fitness_mode =
        fitness_mode_from_string(maybe<std::string>(j, "fitness_mode").value_or("priority"));
    config.objective_directions.clear();
    if (j.contains("objective_directions")) {
        for (const auto& d : j.at("objective_directions")) {
            config.objective_directions.push_back(direction_from_string(d.get<std::string>()));
        }
    } else {
        config.objective_directions = {Direction::kMinimize};
    }
    config.opponent_strategy = opponent_strategy_from_string(
        maybe<std::string>(j, "opponent_strategy").value_or("past_generation"));
    config.opponent_window_k = maybe<int>(j, "opponent_window_k").value_or(2);
    config.seed = maybe<std::uint64_t>(j, "seed").value_or(0);
    config.max_generations = maybe<int>(j, "max_generations").value_or(0);
    return config;
}

Json to_json(const Measurement& m) {
    Json objectives = Json::array();
    for (const auto& o : m.objectives) {
        if (o.has_value()) {
            objectives.push_back(*o);
        } else {
            objectives.push_back(nullptr);
        }
    }
    return Json{{"step", m.step},
                {"objectives", objectives},
                {"checkpoint_path", m.checkpoint_path}};
}

Measurement measurement_from_json(const Json& j) {
    Measurement m;
    m.step = require<std::int64_t>(j, "step");
    if (!j.contains("objectives") || !j.at("objectives").is_array()) {
        bad("measurement objectives must be an array");
    }
    for (const auto& o : j.at("objectives")) {
        if (o.is_null()) {
            m.objectives.push_back(std::nullopt);
        } else {
            m.objectives.push_back(o.get<double>());
        }
    }
    m.checkpoint_path = require<std::string>(j, "checkpoint_path");
    return m;
}

Json to_json(const Trial& trial) {
    Json j;
    j["trial_id"] = trial.trial_id;
    j["study_id"] = trial.study_id;
    j["hparams"] = to_json(trial.hparams);
    if (trial.warm_start_checkpoint_path) {
        j["warm_start_checkpoint_path"] = *trial.warm_start_checkpoint_path;
    }
    if (trial.parent_trial_id) j["parent_trial_id"] = *trial.parent_trial_id;
    if (trial.initiator_parent_trial_id) {
        j["initiator_parent_trial_id"] = *trial.initiator_parent_trial_id;
    }
    j["generation"] = trial.generation;
    j["status"] = to_string(trial.status);
    Json measurements = Json::array();
    for (const auto& m : trial.measurements) measurements.push_back(to_json(m));
    j["measurements"] = measurements;
    if (trial.final_checkpoint_path) j["final_checkpoint_path"] = *trial.final_checkpoint_path;
    j["initiated_reproduction"] = trial.initiated_reproduction;
    j["worker_seed"] = trial.worker_seed;
    if (trial.completion_index) j["completion_index"] = *trial.completion_index;
    return j;
}

Trial trial_from_json(const Json& j) {
    Trial trial;
    trial.trial_id = require<TrialId>(j, "trial_id");
    trial.study_id = require<std::string>(j, "study_id");
    if (j.contains("hparams")) trial.hparams = hparams_from_json(j.at("hparams"));
    trial.warm_start_checkpoint_path = maybe<std::string>(j, "warm_start_checkpoint_path");
    trial.parent_trial_id = maybe<TrialId>(j, "parent_trial_id");
    trial.initiator_parent_trial_id = maybe<TrialId>(j, "initiator_parent_trial_id");
    trial.generation = require<int>(j, "generation");
    trial.status = trial_status_from_string(require<std::string>(j, "status"));
    if (j.contains("measurements")) {
        for (const auto& m : j.at("measurements")) {
            trial.measurements.push_back(measurement_from_json(m));
        }
    }
    trial.final_checkpoint_path = maybe<std::string>(j, "final_checkpoint_path");
    trial.initiated_reproduction = maybe<bool>(j, "initiated_reproduction").value_or(false);
    trial.worker_seed = maybe<std::uint64_t>(j, "worker_seed").value_or(0);
    trial.completion_index = maybe<std::uint64_t>(j, "completion_index");
    return trial;
}

}  // namespace pbt
