#include "pbt/lifecycle.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "pbt/evolution.hpp"

namespace pbt {

Result<DependencyGraph> extract_dependency_graph(const std::vector<TrialId>& targets,
                                                 const std::vector<Trial>& trials) {
    std::map<TrialId, const Trial*> by_id;
    for (const auto& t : trials) by_id[t.trial_id] = &t;

    std::set<TrialId> closure;
    std::vector<TrialId> frontier;
    for (TrialId id : targets) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            return ServiceError{ServiceError::Code::kNotFound,
                                "unknown target trial " + std::to_string(id)};
        }
        if (!it->second->completed()) {
            return ServiceError{ServiceError::Code::kInvalidState,
                                "target trial " + std::to_string(id) + " is not completed"};
        }
        if (closure.insert(id).second) frontier.push_back(id);
    }
    while (!frontier.empty()) {
        TrialId id = frontier.back();
        frontier.pop_back();
        const Trial* t = by_id.at(id);
        if (!t->parent_trial_id.has_value()) continue;
        TrialId parent = *t->parent_trial_id;
        if (by_id.find(parent) == by_id.end()) {
            return ServiceError{ServiceError::Code::kIncompleteLineage,
                                "missing ancestor record " + std::to_string(parent)};
        }
        if (closure.insert(parent).second) frontier.push_back(parent);
    }

    DependencyGraph graph;
    // Trials are appended in suggestion order and warm-starts only point
    // backward, so ascending trial id is already a topological order.
    for (const auto& t : trials) {
        if (closure.count(t.trial_id) == 0) continue;
        graph.nodes.push_back(t.trial_id);
        graph.execution_order.push_back(t.trial_id);
        if (t.parent_trial_id.has_value()) {
            graph.edges.emplace_back(t.trial_id, *t.parent_trial_id);
        }
    }
    return graph;
}

Result<std::string> replay_study(StudyService& service, const std::string& source_study_id,
                                 const std::vector<TrialId>& targets,
                                 const std::string& out_study_id) {
    auto trials = service.list_trials(source_study_id);
    if (!trials.ok()) return trials.error();
    auto status = service.get_study(source_study_id);
    if (!status.ok()) return status.error();

    auto graph = extract_dependency_graph(targets, trials.value());
    if (!graph.ok()) return graph.error();

    std::map<TrialId, const Trial*> by_id;
    for (const auto& t : trials.value()) by_id[t.trial_id] = &t;
    std::map<TrialId, int> entry_index;

    ReplayPlan plan;
    plan.source_study_id = source_study_id;
    for (TrialId id : graph.value().execution_order) {
        const Trial& t = *by_id.at(id);
        ReplayEntry entry;
        entry.source_trial_id = id;
        entry.hparams = t.hparams;
        entry.worker_seed = t.worker_seed;
        entry.generation = t.generation;
        entry.parent_entry =
            t.parent_trial_id.has_value() ? entry_index.at(*t.parent_trial_id) : -1;
        entry_index[id] = static_cast<int>(plan.entries.size());
        plan.entries.push_back(std::move(entry));
    }

    StudyConfig config = status.value().config;
    config.study_id = out_study_id;
    return service.create_replay_study(config, plan);
}

namespace {

// Lowest generation a future initiator can have: completed-but-uninitiated
// trials first, then pending ones (they complete before initiating).
std::optional<int> min_future_initiator_generation(const std::vector<Trial>& trials) {
    std::optional<int> g;
    for (const auto& t : trials) {
        bool candidate = (t.completed() && !t.initiated_reproduction) || t.pending();
        if (candidate && (!g.has_value() || t.generation < *g)) g = t.generation;
    }
    return g;
}

bool can_still_parent(const Trial& trial, const StudyConfig& config,
                      const std::vector<Trial>& trials, bool complete) {
    if (complete) return false;
    if (trial.completed() && !trial.initiated_reproduction) return true;  // will initiate
    auto g_future = min_future_initiator_generation(trials);
    if (!g_future.has_value()) return false;  // stalled study, nothing can reproduce
    int last_initiator_gen =
        config.max_generations > 0 ? config.max_generations - 2 : INT32_MAX;
    if (trial.generation > last_initiator_gen &&
        config.opponent_strategy != OpponentStrategy::kAnyGeneration) {
        // can only be opponent of initiators at generation >= its own
        return config.opponent_strategy == OpponentStrategy::kPastGeneration &&
               trial.generation <= last_initiator_gen + config.opponent_window_k - 1 &&
               trial.generation >= *g_future - config.opponent_window_k + 1 &&
               *g_future <= last_initiator_gen;
    }
    switch (config.opponent_strategy) {
        case OpponentStrategy::kAnyGeneration:
            return true;
        case OpponentStrategy::kSameGeneration:
            return trial.generation >= *g_future && trial.generation <= last_initiator_gen;
        case OpponentStrategy::kPastGeneration:
            return trial.generation >= *g_future - config.opponent_window_k + 1;
    }
    return true;
}

}  // namespace

GcReport garbage_collect(const StudyConfig& config, const std::vector<Trial>& trials,
                         CheckpointStore& checkpoints, bool keep_final, bool dry_run) {
    GcReport report;
    report.dry_run = dry_run;

    std::set<std::string> evaluated;
    std::set<std::string> finals;
    std::set<std::string> warm_start_sources;  // of pending trials
    for (const auto& t : trials) {
        for (const auto& m : t.measurements) evaluated.insert(m.checkpoint_path);
        if (t.final_checkpoint_path) finals.insert(*t.final_checkpoint_path);
        if (t.pending() && t.warm_start_checkpoint_path) {
            warm_start_sources.insert(*t.warm_start_checkpoint_path);
        }
        // A pending trial's newest checkpoint may become its final one, so
        // treat it as a potential warm-start source as well.
        if (t.pending() && !t.measurements.empty()) {
            warm_start_sources.insert(t.measurements.back().checkpoint_path);
        }
    }
    const bool complete = study_complete(trials, config);
    std::set<std::string> retained_finals;
    for (const auto& t : trials) {
        if (!t.final_checkpoint_path) continue;
        if (keep_final || can_still_parent(t, config, trials, complete)) {
            retained_finals.insert(*t.final_checkpoint_path);
        }
    }

    for (const std::string& path : checkpoints.list(config.study_id)) {
        bool deletable = evaluated.count(path) != 0 &&
                         !(finals.count(path) != 0 && retained_finals.count(path) != 0) &&
                         warm_start_sources.count(path) == 0;
        if (!deletable) {
            report.kept.push_back(path);
            continue;
        }
        if (dry_run) {
            report.deleted.push_back(path);
            continue;
        }
        try {
            checkpoints.remove(path);
            report.deleted.push_back(path);
        } catch (const std::exception&) {
            report.kept.push_back(path);
            report.retryable = true;
        }
    }
    return report;
}

}  // namespace pbt
