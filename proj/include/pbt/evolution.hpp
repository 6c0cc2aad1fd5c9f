#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "pbt/study.hpp"

namespace pbt {

// Audit record of one binary tournament.
struct TournamentRecord {
    TrialId initiator_id = 0;
    std::optional<TrialId> opponent_id;
    TrialId winner_id = 0;
};

struct SuggestionDecision {
    Trial child;  // pending, fully populated hparams + lineage
    std::optional<TournamentRecord> tournament;
};

enum class SuggestOutcome { kSuggested, kDefer, kStudyComplete };

struct SuggestResult {
    SuggestOutcome outcome = SuggestOutcome::kDefer;
    std::optional<SuggestionDecision> decision;
};

// Largest g such that every generation g' <= g has at least population_size
// completed trials; -1 while generation 0 is incomplete.
int last_complete_generation(const std::vector<Trial>& trials, int population_size);

// Completed, uninitiated trial with the smallest (generation,
// completion_index, trial_id) key, or nullptr when none exists.
const Trial* get_oldest_uninitiated(const std::vector<Trial>& trials);

// Survival pool for one tournament. Only completed trials compete; the
// initiator itself is always excluded. past_generation keeps generations in
// [initiator.generation - k + 1, initiator.generation].
std::vector<const Trial*> select_opponents(const Trial& initiator,
                                           const std::vector<Trial>& trials,
                                           OpponentStrategy strategy, int k);

// Samples one opponent uniformly and compares fitness (last measurement's
// objectives). The initiator wins ties, incomparable outcomes and empty
// pools. Consumes one rng draw iff the pool is non-empty.
const Trial& binary_tournament(const Trial& initiator,
                               const std::vector<const Trial*>& opponents,
                               FitnessMode mode,
                               const std::vector<Direction>& directions,
                               RandomStream& rng);

// Same contract, but also reports which opponent was sampled (for audit).
struct TournamentOutcome {
    const Trial* winner = nullptr;
    std::optional<TrialId> opponent_id;
};
TournamentOutcome run_binary_tournament(const Trial& initiator,
                                        const std::vector<const Trial*>& opponents,
                                        FitnessMode mode,
                                        const std::vector<Direction>& directions,
                                        RandomStream& rng);

// Mutates a parent assignment. Mutable floats are multiplied by 0.8 or 1.2
// (fair coin) and clamped to bounds; integers and discretes step to the
// adjacent feasible value (fair coin direction, holding at a boundary);
// categoricals are re-sampled uniformly. Immutable specs pass through and
// consume no draw. Guard-inactive children are dropped; newly active
// children are sampled fresh. Specs are visited in topological order.
HParams mutate(const HParams& hparams, const std::vector<ParameterSpec>& specs,
               RandomStream& rng);

// One step of the trial-suggestion algorithm. While generation 0 has fewer
// than population_size live (non-stopped) trials, emits a sampled seed trial.
// Otherwise picks the oldest completed uninitiated trial as initiator, gated
// on its generation having population_size completed members (budget mode),
// runs the tournament and reproduces. Child generation is
// initiator.generation + 1; with a bounded study, trials of the final
// generation never initiate and a fully complete study yields kStudyComplete.
//
// Draw discipline (one stream per study, cursor persisted by the service):
//   seed trial        -> sample_hparams draws, topological spec order
//   reproduction      -> 1 draw opponent choice (iff pool non-empty),
//                        then mutate() draws in topological spec order
SuggestResult get_new_suggestion(const std::vector<Trial>& trials,
                                 const StudyConfig& config, RandomStream& rng,
                                 TrialId next_trial_id);

// Pluggable early-stopping policy; the default stops nothing.
using EarlyStoppingPolicy =
    std::function<std::vector<TrialId>(const std::vector<Trial>&, const StudyConfig&)>;

std::vector<TrialId> get_early_stopping_trials(const std::vector<Trial>& trials,
                                               const StudyConfig& config,
                                               const EarlyStoppingPolicy& policy = {});

// Example policy: stop pending trials more than `lag` generations behind the
// last complete generation.
EarlyStoppingPolicy make_lagging_generation_policy(int lag);

// True when all generations 0 .. max_generations-1 have population_size
// completed trials (only meaningful for bounded studies).
bool study_complete(const std::vector<Trial>& trials, const StudyConfig& config);

}  // namespace pbt
