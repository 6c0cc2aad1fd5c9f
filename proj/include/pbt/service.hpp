#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pbt/evolution.hpp"
#include "pbt/store.hpp"
#include "pbt/study.hpp"

namespace pbt {

struct ServiceError {
    enum class Code {
        kNotFound,
        kInvalidArgument,
        kInvalidState,
        kConflict,
        kOrdering,
        kIncompleteLineage,
        kInternal,
    };
    Code code = Code::kInternal;
    std::string reason;
};

std::string to_string(ServiceError::Code code);

template <typename T>
class Result {
public:
    Result(T value) : value_(std::move(value)) {}  // NOLINT: implicit by design
    Result(ServiceError error) : error_(std::move(error)) {}
    bool ok() const { return !error_.has_value(); }
    const T& value() const { return *value_; }
    T& value() { return *value_; }
    const ServiceError& error() const { return *error_; }

private:
    std::optional<T> value_;
    std::optional<ServiceError> error_;
};

struct Ack {};

// One scripted trial of a replay study: re-executes a source trial with its
// recorded hyperparameters and worker seed, warm-started from the replayed
// counterpart of its original parent.
struct ReplayEntry {
    TrialId source_trial_id = 0;
    HParams hparams;
    std::uint64_t worker_seed = 0;
    int generation = 0;
    int parent_entry = -1;  // index into the plan, -1 for roots
};

struct ReplayPlan {
    std::string source_study_id;
    std::vector<ReplayEntry> entries;  // topologically ordered
};

struct TrialResponse {
    enum class Kind { kTrial, kDefer, kStudyComplete };
    Kind kind = Kind::kDefer;
    std::optional<Trial> trial;
    double retry_delay_s = 1.0;
};

struct StudyStatus {
    StudyConfig config;
    std::size_t trial_count = 0;
    std::size_t completed_count = 0;
    bool budget_mode = false;
    bool complete = false;
};

struct RecoveryReport {
    std::vector<TrialId> stopped_trial_ids;
};

// Stateless controller core: every response is a pure function of the
// persisted study log; the in-memory StudyRecord is just a cache rebuilt by
// replaying the log. Per-study transitions are serialized by a single-writer
// mutex; distinct studies proceed in parallel.
class StudyService {
public:
    explicit StudyService(TrialStore& store, double defer_retry_delay_s = 1.0);

    Result<std::string> create_study(const StudyConfig& config);
    Result<std::string> create_replay_study(const StudyConfig& config,
                                            const ReplayPlan& plan);
    Result<TrialResponse> request_trial(const std::string& study_id,
                                        const std::string& worker_id);
    Result<Ack> report_measurement(const std::string& study_id, TrialId trial_id,
                                   const Measurement& measurement);
    Result<Ack> complete_trial(const std::string& study_id, TrialId trial_id,
                               const std::string& final_checkpoint_path);
    Result<Ack> stop_trial(const std::string& study_id, TrialId trial_id);
    Result<std::vector<TrialId>> poll_early_stops(const std::string& study_id);
    Result<RecoveryReport> recover_study(const std::string& study_id);
    Result<StudyStatus> get_study(const std::string& study_id);
    Result<std::vector<Trial>> list_trials(const std::string& study_id);

    void set_early_stopping_policy(EarlyStoppingPolicy policy);
    // Optional hook used to flag completions whose final checkpoint is not
    // present in the checkpoint store (worker's duty to validate; the service
    // only audits). Audit notes land in the study log as "audit" records.
    void set_checkpoint_exists_hook(std::function<bool(const std::string&)> hook);

private:
    struct StudyRecord {
        StudyConfig config;
        std::vector<Trial> trials;  // trial_id == index + 1
        std::uint64_t completion_counter = 0;
        std::uint64_t rng_cursor = 0;
        std::optional<ReplayPlan> replay;
        std::vector<std::optional<TrialId>> replay_issued;  // per plan entry
    };

    struct StudySlot {
        std::mutex mutex;
        std::unique_ptr<StudyRecord> record;  // loaded lazily from the log
    };

    StudySlot& slot_for(const std::string& study_id);
    Result<Ack> load_locked(const std::string& study_id, StudySlot& slot);
    static void apply_record(StudyRecord& record, const Json& entry);
    Trial* find_trial(StudyRecord& record, TrialId trial_id);

    TrialStore& store_;
    double defer_retry_delay_s_;
    EarlyStoppingPolicy early_stopping_policy_;
    std::function<bool(const std::string&)> checkpoint_exists_hook_;
    std::mutex slots_mutex_;
    std::map<std::string, std::unique_ptr<StudySlot>> slots_;
};

Json to_json(const ReplayPlan& plan);
ReplayPlan replay_plan_from_json(const Json& j);

}  // namespace pbt
