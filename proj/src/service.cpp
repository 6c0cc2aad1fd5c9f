#include "pbt/service.hpp"

#include <algorithm>
#include <stdexcept>

namespace pbt {

std::string to_string(ServiceError::Code code) {
    switch (code) {
        case ServiceError::Code::kNotFound: return "not_found";
        case ServiceError::Code::kInvalidArgument: return "invalid_argument";
        case ServiceError::Code::kInvalidState: return "invalid_state";
        case ServiceError::Code::kConflict: return "conflict";
        case ServiceError::Code::kOrdering: return "ordering";
        case ServiceError::Code::kIncompleteLineage: return "incomplete_lineage";
        case ServiceError::Code::kInternal: return "internal";
    }
    return "internal";
}

Json to_json(const ReplayPlan& plan) {
    Json entries = Json::array();
    for (const auto& e : plan.entries) {
        entries.push_back({{"source_trial_id", e.source_trial_id},
                           {"hparams", to_json(e.hparams)},
                           {"worker_seed", e.worker_seed},
                           {"generation", e.generation},
                           {"parent_entry", e.parent_entry}});
    }
    return Json{{"source_study_id", plan.source_study_id}, {"entries", entries}};
}

ReplayPlan replay_plan_from_json(const Json& j) {
    ReplayPlan plan;
    plan.source_study_id = j.at("source_study_id").get<std::string>();
    for (const auto& e : j.at("entries")) {
        ReplayEntry entry;
        entry.source_trial_id = e.at("source_trial_id").get<TrialId>();
        entry.hparams = hparams_from_json(e.at("hparams"));
        entry.worker_seed = e.at("worker_seed").get<std::uint64_t>();
        entry.generation = e.at("generation").get<int>();
        entry.parent_entry = e.at("parent_entry").get<int>();
        plan.entries.push_back(std::move(entry));
    }
    return plan;
}

StudyService::StudyService(TrialStore& store, double defer_retry_delay_s)
    : store_(store), defer_retry_delay_s_(defer_retry_delay_s) {}

void StudyService::set_early_stopping_policy(EarlyStoppingPolicy policy) {
    early_stopping_policy_ = std::move(policy);
}

void StudyService::set_checkpoint_exists_hook(std::function<bool(const std::string&)> hook) {
    checkpoint_exists_hook_ = std::move(hook);
}

StudyService::StudySlot& StudyService::slot_for(const std::string& study_id) {
    std::lock_guard<std::mutex> lock(slots_mutex_);
    auto& slot = slots_[study_id];
    if (!slot) slot = std::make_unique<StudySlot>();
    return *slot;
}

// The single fold that defines study state: both live updates and reloads go
// through it, so a restarted process reconstructs byte-identical state.
void StudyService::apply_record(StudyRecord& record, const Json& entry) {
    const std::string kind = entry.at("kind").get<std::string>();
    if (kind == "create_study") {
        record.config = study_config_from_json(entry.at("config"));
    } else if (kind == "replay_plan") {
        record.replay = replay_plan_from_json(entry.at("plan"));
        record.replay_issued.assign(record.replay->entries.size(), std::nullopt);
    } else if (kind == "suggest") {
        Trial trial = trial_from_json(entry.at("trial"));
        record.rng_cursor = entry.at("rng_cursor").get<std::uint64_t>();
        if (entry.contains("tournament")) {
            TrialId initiator = entry.at("tournament").at("initiator_id").get<TrialId>();
            record.trials.at(initiator - 1).initiated_reproduction = true;
        }
        if (entry.contains("replay_entry")) {
            record.replay_issued.at(entry.at("replay_entry").get<std::size_t>()) =
                trial.trial_id;
        }
        record.trials.push_back(std::move(trial));
    } else if (kind == "measure") {
        TrialId id = entry.at("trial_id").get<TrialId>();
        record.trials.at(id - 1).measurements.push_back(
            measurement_from_json(entry.at("measurement")));
    } else if (kind == "complete") {
        TrialId id = entry.at("trial_id").get<TrialId>();
        Trial& t = record.trials.at(id - 1);
        t.status = TrialStatus::kCompleted;
        t.final_checkpoint_path = entry.at("final_checkpoint_path").get<std::string>();
        t.completion_index = record.completion_counter++;
    } else if (kind == "stop") {
        TrialId id = entry.at("trial_id").get<TrialId>();
        Trial& t = record.trials.at(id - 1);
        t.status = TrialStatus::kStopped;
        ++record.completion_counter;
        // The initiator's reproduction slot is freed so the generation can
        // refill after early stops or recovery.
        if (t.initiator_parent_trial_id) {
            record.trials.at(*t.initiator_parent_trial_id - 1).initiated_reproduction = false;
        }
    } else if (kind == "recover") {
        for (Trial& t : record.trials) {
            if (!t.pending()) continue;
            t.status = TrialStatus::kStopped;
            ++record.completion_counter;
            if (t.initiator_parent_trial_id) {
                record.trials.at(*t.initiator_parent_trial_id - 1).initiated_reproduction =
                    false;
            }
        }
    } else if (kind == "audit") {
        // informational only
    } else {
        throw std::runtime_error("unknown study log record kind: " + kind);
    }
}

Result<Ack> StudyService::load_locked(const std::string& study_id, StudySlot& slot) {
    if (slot.record) return Ack{};
    if (!store_.exists(study_id)) {
        return ServiceError{ServiceError::Code::kNotFound, "unknown study " + study_id};
    }
    auto record = std::make_unique<StudyRecord>();
    for (const Json& entry : store_.read_all(study_id)) {
        apply_record(*record, entry);
    }
    slot.record = std::move(record);
    return Ack{};
}

Trial* StudyService::find_trial(StudyRecord& record, TrialId trial_id) {
    if (trial_id == 0 || trial_id > record.trials.size()) return nullptr;
    return &record.trials[trial_id - 1];
}

Result<std::string> StudyService::create_study(const StudyConfig& config) {
    auto violations = validate_study_config(config);
    if (!violations.empty()) {
        std::string reason = "invalid config:";
        for (const auto& v : violations) reason += " [" + v.field + ": " + v.rule + "]";
        return ServiceError{ServiceError::Code::kInvalidArgument, reason};
    }
    StudySlot& slot = slot_for(config.study_id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    if (store_.exists(config.study_id)) {
        auto loaded = load_locked(config.study_id, slot);
        if (!loaded.ok()) return loaded.error();
        if (to_json(slot.record->config) == to_json(config)) {
            return config.study_id;  // idempotent re-create
        }
        return ServiceError{ServiceError::Code::kConflict,
                            "study exists with a different config"};
    }
    Json entry{{"kind", "create_study"}, {"config", to_json(config)}};
    store_.append(config.study_id, entry);
    slot.record = std::make_unique<StudyRecord>();
    apply_record(*slot.record, entry);
    return config.study_id;
}

Result<std::string> StudyService::create_replay_study(const StudyConfig& config,
                                                      const ReplayPlan& plan) {
    auto created = create_study(config);
    if (!created.ok()) return created.error();
    StudySlot& slot = slot_for(config.study_id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    auto loaded = load_locked(config.study_id, slot);
    if (!loaded.ok()) return loaded.error();
    if (slot.record->replay.has_value()) {
        if (to_json(*slot.record->replay) == to_json(plan)) return config.study_id;
        return ServiceError{ServiceError::Code::kConflict,
                            "replay study exists with a different plan"};
    }
    if (!slot.record->trials.empty()) {
        return ServiceError{ServiceError::Code::kInvalidState,
                            "cannot attach a replay plan to a started study"};
    }
    Json entry{{"kind", "replay_plan"}, {"plan", to_json(plan)}};
    store_.append(config.study_id, entry);
    apply_record(*slot.record, entry);
    return config.study_id;
}

Result<TrialResponse> StudyService::request_trial(const std::string& study_id,
                                                  const std::string& /*worker_id*/) {
    StudySlot& slot = slot_for(study_id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    auto loaded = load_locked(study_id, slot);
    if (!loaded.ok()) return loaded.error();
    StudyRecord& record = *slot.record;

    TrialResponse response;
    response.retry_delay_s = defer_retry_delay_s_;

    if (record.replay.has_value()) {
        // Replay mode: issue scripted trials in execution order, each gated
        // on the completion of its replayed parent. No evolution decisions.
        const auto& entries = record.replay->entries;
        bool all_done = true;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const Trial* issued = record.replay_issued[i].has_value()
                                      ? find_trial(record, *record.replay_issued[i])
                                      : nullptr;
            if (issued != nullptr && issued->status != TrialStatus::kStopped) {
                if (!issued->completed()) all_done = false;
                continue;
            }
            all_done = false;
            const ReplayEntry& e = entries[i];
            const Trial* parent = nullptr;
            if (e.parent_entry >= 0) {
                auto parent_id = record.replay_issued[static_cast<std::size_t>(e.parent_entry)];
                parent = parent_id.has_value() ? find_trial(record, *parent_id) : nullptr;
                if (parent == nullptr || !parent->completed()) continue;  // not ready yet
            }
            Trial child;
            child.trial_id = record.trials.size() + 1;
            child.study_id = study_id;
            child.hparams = e.hparams;
            child.generation = e.generation;
            child.worker_seed = e.worker_seed;
            if (parent != nullptr) {
                child.parent_trial_id = parent->trial_id;
                child.warm_start_checkpoint_path = parent->final_checkpoint_path;
            }
            Json entry{{"kind", "suggest"},
                       {"trial", to_json(child)},
                       {"rng_cursor", record.rng_cursor},
                       {"replay_entry", i}};
            store_.append(study_id, entry);
            apply_record(record, entry);
            response.kind = TrialResponse::Kind::kTrial;
            response.trial = child;
            return response;
        }
        response.kind = all_done ? TrialResponse::Kind::kStudyComplete
                                 : TrialResponse::Kind::kDefer;
        return response;
    }

    RandomStream rng(record.config.seed, record.rng_cursor);
    SuggestResult result = get_new_suggestion(record.trials, record.config, rng,
                                              record.trials.size() + 1);
    switch (result.outcome) {
        case SuggestOutcome::kDefer:
            response.kind = TrialResponse::Kind::kDefer;
            return response;
        case SuggestOutcome::kStudyComplete:
            response.kind = TrialResponse::Kind::kStudyComplete;
            return response;
        case SuggestOutcome::kSuggested:
            break;
    }

    Json entry{{"kind", "suggest"},
               {"trial", to_json(result.decision->child)},
               {"rng_cursor", rng.cursor()}};
    if (result.decision->tournament.has_value()) {
        const TournamentRecord& t = *result.decision->tournament;
        Json tj{{"initiator_id", t.initiator_id}, {"winner_id", t.winner_id}};
        if (t.opponent_id) tj["opponent_id"] = *t.opponent_id;
        entry["tournament"] = tj;
    }
    store_.append(study_id, entry);
    apply_record(record, entry);
    response.kind = TrialResponse::Kind::kTrial;
    response.trial = result.decision->child;
    return response;
}

Result<Ack> StudyService::report_measurement(const std::string& study_id, TrialId trial_id,
                                             const Measurement& measurement) {
    StudySlot& slot = slot_for(study_id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    auto loaded = load_locked(study_id, slot);
    if (!loaded.ok()) return loaded.error();
    StudyRecord& record = *slot.record;
    Trial* trial = find_trial(record, trial_id);
    if (trial == nullptr) {
        return ServiceError{ServiceError::Code::kNotFound, "unknown trial"};
    }
    if (!trial->pending()) {
        return ServiceError{ServiceError::Code::kInvalidState,
                            "measurement on a non-pending trial"};
    }
    if (measurement.objectives.size() != record.config.objective_directions.size()) {
        return ServiceError{ServiceError::Code::kInvalidArgument,
                            "objective tuple length mismatch"};
    }
    if (!trial->measurements.empty() &&
        measurement.step <= trial->measurements.back().step) {
        return ServiceError{ServiceError::Code::kOrdering,
                            "measurement steps must strictly increase"};
    }
    Json entry{{"kind", "measure"},
               {"trial_id", trial_id},
               {"measurement", to_json(measurement)}};
    store_.append(study_id, entry);
    apply_record(record, entry);
    return Ack{};
}

Result<Ack> StudyService::complete_trial(const std::string& study_id, TrialId trial_id,
                                         const std::string& final_checkpoint_path) {
    StudySlot& slot = slot_for(study_id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    auto loaded = load_locked(study_id, slot);
    if (!loaded.ok()) return loaded.error();
    StudyRecord& record = *slot.record;
    Trial* trial = find_trial(record, trial_id);
    if (trial == nullptr) {
        return ServiceError{ServiceError::Code::kNotFound, "unknown trial"};
    }
    if (trial->completed()) {
        if (trial->final_checkpoint_path == final_checkpoint_path) return Ack{};
        return ServiceError{ServiceError::Code::kConflict,
                            "trial already completed with a different checkpoint"};
    }
    if (!trial->pending()) {
        return ServiceError{ServiceError::Code::kInvalidState, "trial is stopped"};
    }
    if (trial->measurements.empty()) {
        return ServiceError{ServiceError::Code::kInvalidState,
                            "a trial without measurements cannot complete"};
    }
    if (checkpoint_exists_hook_ && !checkpoint_exists_hook_(final_checkpoint_path)) {
        store_.append(study_id, Json{{"kind", "audit"},
                                     {"trial_id", trial_id},
                                     {"note", "final checkpoint not found in store"},
                                     {"checkpoint_path", final_checkpoint_path}});
    }
    Json entry{{"kind", "complete"},
               {"trial_id", trial_id},
               {"final_checkpoint_path", final_checkpoint_path}};
    store_.append(study_id, entry);
    apply_record(record, entry);
    return Ack{};
}

Result<Ack> StudyService::stop_trial(const std::string& study_id, TrialId trial_id) {
    StudySlot& slot = slot_for(study_id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    auto loaded = load_locked(study_id, slot);
    if (!loaded.ok()) return loaded.error();
    StudyRecord& record = *slot.record;
    Trial* trial = find_trial(record, trial_id);
    if (trial == nullptr) {
        return ServiceError{ServiceError::Code::kNotFound, "unknown trial"};
    }
    if (trial->status == TrialStatus::kStopped) return Ack{};  // idempotent
    if (!trial->pending()) {
        return ServiceError{ServiceError::Code::kInvalidState,
                            "only pending trials can be stopped"};
    }
    Json entry{{"kind", "stop"}, {"trial_id", trial_id}};
    store_.append(study_id, entry);
    apply_record(record, entry);
    return Ack{};
}

Result<std::vector<TrialId>> StudyService::poll_early_stops(const std::string& study_id) {
    StudySlot& slot = slot_for(study_id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    auto loaded = load_locked(study_id, slot);
    if (!loaded.ok()) return loaded.error();
    return get_early_stopping_trials(slot.record->trials, slot.record->config,
                                     early_stopping_policy_);
}

Result<RecoveryReport> StudyService::recover_study(const std::string& study_id) {
    StudySlot& slot = slot_for(study_id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    auto loaded = load_locked(study_id, slot);
    if (!loaded.ok()) return loaded.error();
    StudyRecord& record = *slot.record;
    RecoveryReport report;
    for (const Trial& t : record.trials) {
        if (t.pending()) report.stopped_trial_ids.push_back(t.trial_id);
    }
    if (!report.stopped_trial_ids.empty()) {
        Json entry{{"kind", "recover"}};
        store_.append(study_id, entry);
        apply_record(record, entry);
    }
    return report;
}

Result<StudyStatus> StudyService::get_study(const std::string& study_id) {
    StudySlot& slot = slot_for(study_id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    auto loaded = load_locked(study_id, slot);
    if (!loaded.ok()) return loaded.error();
    const StudyRecord& record = *slot.record;
    StudyStatus status;
    status.config = record.config;
    status.trial_count = record.trials.size();
    status.completed_count = static_cast<std::size_t>(
        std::count_if(record.trials.begin(), record.trials.end(),
                      [](const Trial& t) { return t.completed(); }));
    status.budget_mode = record.config.budget_mode();
    if (record.replay.has_value()) {
        status.complete = std::all_of(
            record.replay_issued.begin(), record.replay_issued.end(),
            [&](const std::optional<TrialId>& id) {
                return id.has_value() &&
                       record.trials[*id - 1].completed();
            });
    } else {
        status.complete = study_complete(record.trials, record.config);
    }
    return status;
}

Result<std::vector<Trial>> StudyService::list_trials(const std::string& study_id) {
    StudySlot& slot = slot_for(study_id);
    std::lock_guard<std::mutex> lock(slot.mutex);
    auto loaded = load_locked(study_id, slot);
    if (!loaded.ok()) return loaded.error();
    return slot.record->trials;
}

}  // namespace pbt
