#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pbt/rng.hpp"

namespace pbt {

using TrialId = std::uint64_t;

enum class ParamKind { kInteger, kFloat, kDiscrete, kCategorical };
enum class Scale { kLinear, kLog };
enum class FitnessMode { kPriority, kDominance };
enum class Direction { kMinimize, kMaximize };
enum class OpponentStrategy { kPastGeneration, kSameGeneration, kAnyGeneration };
enum class TrialStatus { kPending, kCompleted, kStopped };

// A hyperparameter value: integer, numeric (float/discrete) or symbolic.
using HParamValue = std::variant<std::int64_t, double, std::string>;
using HParams = std::map<std::string, HParamValue>;

// One node of the parameter search space. Child activation is expressed as
// edges (guard value -> child spec name); the full spec set of a study forms
// a DAG over names, roots being the specs no edge points to.
struct ParameterSpec {
    struct ChildEdge {
        std::string guard_value;  // canonical string of the activating value
        std::string child_name;
    };

    std::string name;
    ParamKind kind = ParamKind::kFloat;
    double min_value = 0.0;  // integer/float bounds (inclusive)
    double max_value = 0.0;
    Scale scale = Scale::kLinear;              // float only
    std::vector<double> feasible_values;       // discrete: strictly increasing
    std::vector<std::string> categories;       // categorical: unique
    bool can_mutate = true;
    std::vector<ChildEdge> children;
};

struct StudyConfig {
    std::string study_id;
    std::vector<ParameterSpec> specs;  // every spec in the DAG, roots included
    int population_size = 1;
    int worker_budget = 1;
    int steps_per_trial = 1;
    FitnessMode fitness_mode = FitnessMode::kPriority;
    std::vector<Direction> objective_directions = {Direction::kMinimize};
    OpponentStrategy opponent_strategy = OpponentStrategy::kPastGeneration;
    int opponent_window_k = 2;
    std::uint64_t seed = 0;
    // Generations 0 .. max_generations-1 are trained; 0 means unbounded.
    int max_generations = 0;

    bool budget_mode() const { return worker_budget < population_size; }
};

struct Measurement {
    std::int64_t step = 0;
    std::vector<std::optional<double>> objectives;  // nullopt = missing
    std::string checkpoint_path;
};

struct Trial {
    TrialId trial_id = 0;
    std::string study_id;
    HParams hparams;
    std::optional<std::string> warm_start_checkpoint_path;
    std::optional<TrialId> parent_trial_id;
    std::optional<TrialId> initiator_parent_trial_id;
    int generation = 0;
    TrialStatus status = TrialStatus::kPending;
    std::vector<Measurement> measurements;
    std::optional<std::string> final_checkpoint_path;
    bool initiated_reproduction = false;
    // Seed for all worker-side randomness (fresh init, observation noise).
    // Replay copies it verbatim from the source trial.
    std::uint64_t worker_seed = 0;
    // Monotone index assigned by the service at completion; orders "oldest"
    // across asynchronous finishes.
    std::optional<std::uint64_t> completion_index;

    bool completed() const { return status == TrialStatus::kCompleted; }
    bool pending() const { return status == TrialStatus::kPending; }
};

struct Fitness {
    std::vector<std::optional<double>> values;
    std::vector<Direction> directions;
};

enum class Comparison { kABetter, kBBetter, kIncomparable };

// Lexicographic in priority mode, strict elementwise dominance otherwise.
// Missing elements: in priority mode a missing element loses to a present
// one; in dominance mode any missing element makes the pair incomparable.
// Throws std::invalid_argument on tuple length mismatch.
Comparison compare_fitness(const Fitness& a, const Fitness& b, FitnessMode mode);

// Fitness of a trial = objectives of its last reported measurement.
Fitness trial_fitness(const Trial& trial, const std::vector<Direction>& directions);

struct Violation {
    std::string field;
    std::string rule;
};

std::vector<Violation> validate_study_config(const StudyConfig& config);

// Samples one value for a single spec (spec-kind dispatch, one draw).
HParamValue sample_param_value(const ParameterSpec& spec, RandomStream& rng);

// Samples a full assignment: roots always, children iff their guard matches.
// Specs are visited in a deterministic topological order, so the rng draw
// sequence is reproducible from the stream cursor alone.
HParams sample_hparams(const std::vector<ParameterSpec>& specs, RandomStream& rng);

// Canonical string form of a value, used for guard matching and audits.
std::string hparam_to_string(const HParamValue& value);

// Deterministic topological order over the spec DAG (declaration-order
// tie-break). Returns indices into `specs`. Assumes a validated config.
std::vector<std::size_t> topological_spec_order(const std::vector<ParameterSpec>& specs);

// True iff `spec` is active given `assigned` parent values. Roots are always
// active; a child is active iff some inbound edge's guard matches its
// parent's assigned value.
bool spec_active(const ParameterSpec& spec, const std::vector<ParameterSpec>& specs,
                 const HParams& assigned);

}  // namespace pbt
