#include "pbt/evolution.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace pbt {

namespace {

std::map<int, int> completed_per_generation(const std::vector<Trial>& trials) {
    std::map<int, int> counts;
    for (const auto& t : trials) {
        if (t.completed()) ++counts[t.generation];
    }
    return counts;
}

HParamValue mutate_value(const HParamValue& value, const ParameterSpec& spec,
                         RandomStream& rng) {
    switch (spec.kind) {
        case ParamKind::kFloat: {
            double multiplier = (rng.next_below(2) == 0) ? 0.8 : 1.2;
            double v = std::get<double>(value) * multiplier;
            return std::clamp(v, spec.min_value, spec.max_value);
        }
        case ParamKind::kInteger: {
            bool up = rng.next_below(2) != 0;
            auto v = std::get<std::int64_t>(value);
            auto lo = static_cast<std::int64_t>(spec.min_value);
            auto hi = static_cast<std::int64_t>(spec.max_value);
            if (up) return v < hi ? v + 1 : v;  // hold at boundary
            return v > lo ? v - 1 : v;
        }
        case ParamKind::kDiscrete: {
            bool up = rng.next_below(2) != 0;
            double v = std::get<double>(value);
            const auto& vals = spec.feasible_values;
            if (up) {
                auto it = std::upper_bound(vals.begin(), vals.end(), v);
                return it != vals.end() ? *it : v;  // lowest larger element
            }
            auto it = std::lower_bound(vals.begin(), vals.end(), v);
            return it != vals.begin() ? *(it - 1) : v;  // largest lower element
        }
        case ParamKind::kCategorical:
            return spec.categories[rng.next_below(spec.categories.size())];
    }
    throw std::logic_error("unknown parameter kind");
}

}  // namespace

int last_complete_generation(const std::vector<Trial>& trials, int population_size) {
    auto counts = completed_per_generation(trials);
    int g = -1;
    while (true) {
        auto it = counts.find(g + 1);
        if (it == counts.end() || it->second < population_size) return g;
        ++g;
    }
}

const Trial* get_oldest_uninitiated(const std::vector<Trial>& trials) {
    const Trial* best = nullptr;
    auto key = [](const Trial& t) {
        return std::make_tuple(t.generation, t.completion_index.value_or(0), t.trial_id);
    };
    for (const auto& t : trials) {
        if (!t.completed() || t.initiated_reproduction) continue;
        if (!best || key(t) < key(*best)) best = &t;
    }
    return best;
}

std::vector<const Trial*> select_opponents(const Trial& initiator,
                                           const std::vector<Trial>& trials,
                                           OpponentStrategy strategy, int k) {
    std::vector<const Trial*> pool;
    for (const auto& t : trials) {
        if (!t.completed() || t.trial_id == initiator.trial_id) continue;
        switch (strategy) {
            case OpponentStrategy::kPastGeneration:
                if (t.generation > initiator.generation ||
                    t.generation < initiator.generation - k + 1) {
                    continue;
                }
                break;
            case OpponentStrategy::kSameGeneration:
                if (t.generation != initiator.generation) continue;
                break;
            case OpponentStrategy::kAnyGeneration:
                break;
        }
        pool.push_back(&t);
    }
    return pool;
}

TournamentOutcome run_binary_tournament(const Trial& initiator,
                                        const std::vector<const Trial*>& opponents,
                                        FitnessMode mode,
                                        const std::vector<Direction>& directions,
                                        RandomStream& rng) {
    if (initiator.measurements.empty()) {
        throw std::invalid_argument("binary_tournament: initiator has no measurements");
    }
    if (opponents.empty()) return {&initiator, std::nullopt};
    const Trial& opponent = *opponents[rng.next_below(opponents.size())];
    Comparison cmp = compare_fitness(trial_fitness(initiator, directions),
                                     trial_fitness(opponent, directions), mode);
    const Trial* winner = cmp == Comparison::kBBetter ? &opponent : &initiator;
    return {winner, opponent.trial_id};
}

const Trial& binary_tournament(const Trial& initiator,
                               const std::vector<const Trial*>& opponents,
                               FitnessMode mode,
                               const std::vector<Direction>& directions,
                               RandomStream& rng) {
    return *run_binary_tournament(initiator, opponents, mode, directions, rng).winner;
}

HParams mutate(const HParams& hparams, const std::vector<ParameterSpec>& specs,
               RandomStream& rng) {
    HParams out;
    for (std::size_t i : topological_spec_order(specs)) {
        const ParameterSpec& spec = specs[i];
        if (!spec_active(spec, specs, out)) continue;  // inactive children dropped
        auto it = hparams.find(spec.name);
        if (it == hparams.end()) {
            out[spec.name] = sample_param_value(spec, rng);  // newly active
        } else if (!spec.can_mutate) {
            out[spec.name] = it->second;
        } else {
            out[spec.name] = mutate_value(it->second, spec, rng);
        }
    }
    return out;
}

bool study_complete(const std::vector<Trial>& trials, const StudyConfig& config) {
    if (config.max_generations <= 0) return false;
    return last_complete_generation(trials, config.population_size) >=
           config.max_generations - 1;
}

SuggestResult get_new_suggestion(const std::vector<Trial>& trials,
                                 const StudyConfig& config, RandomStream& rng,
                                 TrialId next_trial_id) {
    SuggestResult result;
    const int population = config.population_size;

    int live_seed_trials = 0;
    for (const auto& t : trials) {
        if (t.generation == 0 && t.status != TrialStatus::kStopped) ++live_seed_trials;
    }

    if (last_complete_generation(trials, population) < 0) {
        if (live_seed_trials >= population) {
            result.outcome = SuggestOutcome::kDefer;  // seeds pending, wait
            return result;
        }
        Trial child;
        child.trial_id = next_trial_id;
        child.study_id = config.study_id;
        child.generation = 0;
        child.status = TrialStatus::kPending;
        child.worker_seed = derive_seed(config.seed, next_trial_id);
        child.hparams = sample_hparams(config.specs, rng);
        result.outcome = SuggestOutcome::kSuggested;
        result.decision = SuggestionDecision{std::move(child), std::nullopt};
        return result;
    }

    if (study_complete(trials, config)) {
        result.outcome = SuggestOutcome::kStudyComplete;
        return result;
    }

    // A stopped seed trial leaves generation 0 short even after it completed
    // once: replace it so the generation can fill.
    if (live_seed_trials < population) {
        Trial child;
        child.trial_id = next_trial_id;
        child.study_id = config.study_id;
        child.generation = 0;
        child.status = TrialStatus::kPending;
        child.worker_seed = derive_seed(config.seed, next_trial_id);
        child.hparams = sample_hparams(config.specs, rng);
        result.outcome = SuggestOutcome::kSuggested;
        result.decision = SuggestionDecision{std::move(child), std::nullopt};
        return result;
    }

    const Trial* initiator = get_oldest_uninitiated(trials);
    if (initiator == nullptr) {
        result.outcome = SuggestOutcome::kDefer;
        return result;
    }
    // Trials of the final generation never reproduce.
    if (config.max_generations > 0 &&
        initiator->generation >= config.max_generations - 1) {
        result.outcome = SuggestOutcome::kDefer;
        return result;
    }
    // Budget-mode gate: reproduce only once the initiator's generation has
    // reached the full population size.
    auto counts = completed_per_generation(trials);
    if (counts[initiator->generation] < population) {
        result.outcome = SuggestOutcome::kDefer;
        return result;
    }

    auto opponents = select_opponents(*initiator, trials, config.opponent_strategy,
                                      config.opponent_window_k);
    TournamentOutcome outcome = run_binary_tournament(
        *initiator, opponents, config.fitness_mode, config.objective_directions, rng);
    const Trial& parent = *outcome.winner;

    Trial child;
    child.trial_id = next_trial_id;
    child.study_id = config.study_id;
    child.generation = initiator->generation + 1;
    child.status = TrialStatus::kPending;
    child.parent_trial_id = parent.trial_id;
    child.initiator_parent_trial_id = initiator->trial_id;
    child.warm_start_checkpoint_path = parent.final_checkpoint_path;
    child.worker_seed = derive_seed(config.seed, next_trial_id);
    child.hparams = mutate(parent.hparams, config.specs, rng);

    TournamentRecord record;
    record.initiator_id = initiator->trial_id;
    record.opponent_id = outcome.opponent_id;
    record.winner_id = parent.trial_id;

    result.outcome = SuggestOutcome::kSuggested;
    result.decision = SuggestionDecision{std::move(child), record};
    return result;
}

std::vector<TrialId> get_early_stopping_trials(const std::vector<Trial>& trials,
                                               const StudyConfig& config,
                                               const EarlyStoppingPolicy& policy) {
    if (!policy) return {};
    return policy(trials, config);
}

EarlyStoppingPolicy make_lagging_generation_policy(int lag) {
    return [lag](const std::vector<Trial>& trials, const StudyConfig& config) {
        std::vector<TrialId> stops;
        int last = last_complete_generation(trials, config.population_size);
        for (const auto& t : trials) {
            if (t.pending() && t.generation < last - lag + 1) stops.push_back(t.trial_id);
        }
        return stops;
    };
}

}  // namespace pbt
