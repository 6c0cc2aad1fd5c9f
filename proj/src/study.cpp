#include "pbt/study.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace pbt {

namespace {

// Normalizes an element to the internal maximize convention.
std::optional<double> normalized(const std::optional<double>& v, Direction dir) {
    if (!v.has_value()) return std::nullopt;
    return dir == Direction::kMinimize ? -*v : *v;
}

}  // namespace

Comparison compare_fitness(const Fitness& a, const Fitness& b, FitnessMode mode) {
    if (a.values.size() != b.values.size() ||
        a.directions.size() != a.values.size() ||
        b.directions.size() != b.values.size()) {
        throw std::invalid_argument("compare_fitness: tuple length mismatch");
    }
    const std::size_t n = a.values.size();

    if (mode == FitnessMode::kDominance) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!a.values[i].has_value() || !b.values[i].has_value()) {
                return Comparison::kIncomparable;
            }
        }
        bool a_all = true, b_all = true;
        for (std::size_t i = 0; i < n; ++i) {
            double av = *normalized(a.values[i], a.directions[i]);
            double bv = *normalized(b.values[i], b.directions[i]);
            if (!(av > bv)) a_all = false;
            if (!(bv > av)) b_all = false;
        }
        if (a_all) return Comparison::kABetter;
        if (b_all) return Comparison::kBBetter;
        return Comparison::kIncomparable;
    }

    // Priority mode: lexicographic; a missing element loses to a present one.
    for (std::size_t i = 0; i < n; ++i) {
        const bool ha = a.values[i].has_value();
        const bool hb = b.values[i].has_value();
        if (!ha && !hb) continue;
        if (!ha) return Comparison::kBBetter;
        if (!hb) return Comparison::kABetter;
        double av = *normalized(a.values[i], a.directions[i]);
        double bv = *normalized(b.values[i], b.directions[i]);
        if (av > bv) return Comparison::kABetter;
        if (bv > av) return Comparison::kBBetter;
    }
    return Comparison::kIncomparable;  // equal tuples
}

Fitness trial_fitness(const Trial& trial, const std::vector<Direction>& directions) {
    Fitness f;
    f.directions = directions;
    if (trial.measurements.empty()) {
        throw std::invalid_argument("trial_fitness: trial has no measurements");
    }
    f.values = trial.measurements.back().objectives;
    f.values.resize(directions.size());  // pad short tuples with missing
    return f;
}

std::string hparam_to_string(const HParamValue& value) {
    if (std::holds_alternative<std::int64_t>(value)) {
        return std::to_string(std::get<std::int64_t>(value));
    }
    if (std::holds_alternative<double>(value)) {
        std::ostringstream os;
        os.precision(17);
        os << std::get<double>(value);
        return os.str();
    }
    return std::get<std::string>(value);
}

namespace {

bool guard_matches(const ParameterSpec& parent, const HParamValue& value,
                   const std::string& guard) {
    switch (parent.kind) {
        case ParamKind::kCategorical:
            return std::holds_alternative<std::string>(value) &&
                   std::get<std::string>(value) == guard;
        case ParamKind::kInteger:
            return std::holds_alternative<std::int64_t>(value) &&
                   std::to_string(std::get<std::int64_t>(value)) == guard;
        case ParamKind::kDiscrete:
        case ParamKind::kFloat: {
            if (!std::holds_alternative<double>(value)) return false;
            try {
                return std::get<double>(value) == std::stod(guard);
            } catch (const std::exception&) {
                return false;
            }
        }
    }
    return false;
}

}  // namespace

std::vector<std::size_t> topological_spec_order(const std::vector<ParameterSpec>& specs) {
    std::unordered_map<std::string, std::size_t> by_name;
    for (std::size_t i = 0; i < specs.size(); ++i) by_name[specs[i].name] = i;

    std::vector<int> indegree(specs.size(), 0);
    for (const auto& s : specs) {
        for (const auto& e : s.children) {
            auto it = by_name.find(e.child_name);
            if (it != by_name.end()) ++indegree[it->second];
        }
    }
    std::vector<std::size_t> order;
    std::vector<std::size_t> frontier;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (indegree[i] == 0) frontier.push_back(i);
    }
    while (!frontier.empty()) {
        // Declaration-order tie-break keeps the draw sequence stable.
        std::sort(frontier.begin(), frontier.end());
        std::size_t i = frontier.front();
        frontier.erase(frontier.begin());
        order.push_back(i);
        for (const auto& e : specs[i].children) {
            auto it = by_name.find(e.child_name);
            if (it != by_name.end() && --indegree[it->second] == 0) {
                frontier.push_back(it->second);
            }
        }
    }
    return order;  // shorter than specs.size() iff the graph has a cycle
}

bool spec_active(const ParameterSpec& spec, const std::vector<ParameterSpec>& specs,
                 const HParams& assigned) {
    bool is_child = false;
    for (const auto& parent : specs) {
        for (const auto& e : parent.children) {
            if (e.child_name != spec.name) continue;
            is_child = true;
            auto it = assigned.find(parent.name);
            if (it != assigned.end() && guard_matches(parent, it->second, e.guard_value)) {
                return true;
            }
        }
    }
    return !is_child;  // roots are always active
}

HParamValue sample_param_value(const ParameterSpec& spec, RandomStream& rng) {
    switch (spec.kind) {
        case ParamKind::kFloat: {
            double u = rng.next_unit();
            if (spec.scale == Scale::kLog) {
                double lo = std::log(spec.min_value), hi = std::log(spec.max_value);
                return std::exp(lo + u * (hi - lo));
            }
            return spec.min_value + u * (spec.max_value - spec.min_value);
        }
        case ParamKind::kInteger: {
            auto lo = static_cast<std::int64_t>(spec.min_value);
            auto hi = static_cast<std::int64_t>(spec.max_value);
            return lo + static_cast<std::int64_t>(
                            rng.next_below(static_cast<std::uint64_t>(hi - lo + 1)));
        }
        case ParamKind::kDiscrete:
            return spec.feasible_values[rng.next_below(spec.feasible_values.size())];
        case ParamKind::kCategorical:
            return spec.categories[rng.next_below(spec.categories.size())];
    }
    throw std::logic_error("unknown parameter kind");
}

HParams sample_hparams(const std::vector<ParameterSpec>& specs, RandomStream& rng) {
    HParams out;
    for (std::size_t i : topological_spec_order(specs)) {
        const ParameterSpec& spec = specs[i];
        if (!spec_active(spec, specs, out)) continue;
        out[spec.name] = sample_param_value(spec, rng);
    }
    return out;
}

std::vector<Violation> validate_study_config(const StudyConfig& config) {
    std::vector<Violation> v;
    if (config.study_id.empty()) v.push_back({"study_id", "must be non-empty"});
    if (config.population_size < 1) v.push_back({"population_size", "must be positive"});
    if (config.worker_budget < 1) v.push_back({"worker_budget", "must be positive"});
    if (config.worker_budget > config.population_size) {
        v.push_back({"worker_budget", "must be <= population_size"});
    }
    if (config.steps_per_trial < 1) v.push_back({"steps_per_trial", "must be positive"});
    if (config.opponent_window_k < 1) v.push_back({"opponent_window_k", "must be >= 1"});
    if (config.max_generations < 0) v.push_back({"max_generations", "must be >= 0"});
    if (config.objective_directions.empty()) {
        v.push_back({"objective_directions", "must declare at least one objective"});
    }

    std::set<std::string> names;
    for (const auto& s : config.specs) {
        const std::string field = "specs[" + s.name + "]";
        if (s.name.empty()) v.push_back({field, "name must be non-empty"});
        if (!names.insert(s.name).second) v.push_back({field, "duplicate spec name"});
        switch (s.kind) {
            case ParamKind::kInteger:
            case ParamKind::kFloat:
                if (!(s.min_value < s.max_value)) {
                    v.push_back({field + ".bounds", "min must be < max"});
                }
                if (s.kind == ParamKind::kFloat && s.scale == Scale::kLog &&
                    !(s.min_value > 0)) {
                    v.push_back({field + ".bounds", "log scale requires min > 0"});
                }
                break;
            case ParamKind::kDiscrete:
                if (s.feasible_values.empty()) {
                    v.push_back({field + ".feasible_values", "must be non-empty"});
                }
                for (std::size_t i = 1; i < s.feasible_values.size(); ++i) {
                    if (!(s.feasible_values[i - 1] < s.feasible_values[i])) {
                        v.push_back({field + ".feasible_values",
                                     "must be strictly increasing"});
                        break;
                    }
                }
                break;
            case ParamKind::kCategorical: {
                if (s.categories.empty()) {
                    v.push_back({field + ".feasible_values", "must be non-empty"});
                }
                std::set<std::string> cats(s.categories.begin(), s.categories.end());
                if (cats.size() != s.categories.size()) {
                    v.push_back({field + ".feasible_values", "values must be unique"});
                }
                break;
            }
        }
        for (const auto& e : s.children) {
            if (!std::any_of(config.specs.begin(), config.specs.end(),
                             [&](const ParameterSpec& c) { return c.name == e.child_name; })) {
                v.push_back({field + ".children", "unknown child spec " + e.child_name});
            }
        }
    }

    if (topological_spec_order(config.specs).size() != config.specs.size()) {
        v.push_back({"specs", "child-edge relation must be acyclic"});
    }
    return v;
}

}  // namespace pbt
