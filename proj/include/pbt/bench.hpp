#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pbt/checkpoint.hpp"
#include "pbt/json_codec.hpp"
#include "pbt/service.hpp"
#include "pbt/study.hpp"
#include "pbt/worker.hpp"

namespace pbt {

// One benchmark arm: a tuning method applied to a toy problem under a fixed
// resource budget. Resource is counted in worker-steps (trainer steps summed
// over workers); wall clock is replaced by simulated time so results are
// machine-independent and reproducible.
struct ExperimentPlan {
    std::string method;  // "pbt" | "grid" | "random"
    std::string name;    // table label; defaults to method when empty
    int population_size = 5;
    int worker_budget = 5;
    int steps_per_trial = 500;
    std::int64_t total_resource_budget = 0;  // worker-steps
    int repeats = 1;
    std::vector<std::uint64_t> seeds;
    OpponentStrategy opponent_strategy = OpponentStrategy::kPastGeneration;
    ToyProblemSpec problem;

    // Search space over problem.lr_param: grid uses the explicit value list,
    // pbt/random sample log-uniformly from [lr_min, lr_max].
    double lr_min = 1e-5;
    double lr_max = 1e-1;
    std::vector<double> grid_values;

    // Per-worker simulated speed multipliers (seconds of simulated time per
    // training step). Empty means homogeneous speed 1.
    std::vector<double> worker_speed_multipliers;
    // Fixed simulated startup cost per trial, in time units.
    double trial_overhead = 0.0;

    std::string label() const { return name.empty() ? method : name; }
};

Json to_json(const ExperimentPlan& plan);
ExperimentPlan plan_from_json(const Json& j);
Result<Ack> validate_plan(const ExperimentPlan& plan);

// Per-worker speed multipliers in [1, 3), seeded: the heterogeneous-cluster
// stand-in used by the opponent-strategy ablation.
std::vector<double> heterogeneous_speeds(int workers, std::uint64_t seed);

// One measurement as observed by the simulator, with global accounting
// attached: `resource` is the cumulative worker-steps consumed across all
// workers when the measurement was taken, `global_step` the cumulative steps
// along the trial's own lineage.
struct SimMeasurementEvent {
    TrialId trial_id = 0;
    int generation = 0;
    std::int64_t local_step = 0;
    std::int64_t global_step = 0;
    std::int64_t resource = 0;
    double time = 0.0;
    double objective = 0.0;  // as reported (includes observation noise)
    double true_loss = 0.0;  // noiseless validation loss
    std::string checkpoint_path;
};

struct SimResult {
    ExperimentPlan plan;
    std::uint64_t seed = 0;
    StudyConfig config;
    std::vector<Trial> trials;
    std::vector<SimMeasurementEvent> events;  // simulated-time order
    std::shared_ptr<MemoryCheckpointStore> checkpoints;
    std::int64_t resource_consumed = 0;
    double sim_time = 0.0;
    int generations_completed = 0;
    double best_true_loss = 0.0;        // min over all measurements
    TrialId best_final_trial_id = 0;    // completed trial with best final loss
};

// Deterministic discrete-event run of one plan: simulated workers pull trials
// from an in-process service (pbt/random) or a fixed arm list (grid), train
// the toy problem, and report measurements at simulated timestamps ordered by
// (time, tie-break sequence). Stops when the resource budget cannot fit
// another trial or the study completes.
SimResult simulate_study(const ExperimentPlan& plan, std::uint64_t seed);

struct ComparisonRow {
    std::string method;
    std::uint64_t seed = 0;
    std::int64_t resource = 0;
    std::int64_t step = 0;  // lineage step of the best-so-far measurement
    double best_objective = 0.0;
};

struct StepCurveRow {
    std::string method;
    std::uint64_t seed = 0;
    std::int64_t step = 0;  // lineage step of the best final trial
    double objective = 0.0;
};

struct ComparisonTables {
    std::vector<ComparisonRow> resource_curve;
    std::vector<StepCurveRow> step_curve;
    std::vector<SimResult> runs;
};

// Runs every (plan, seed) pair and tabulates best-so-far objective against
// consumed resource, plus the objective along the best final trial's lineage.
// All plans must share the same problem and resource budget.
Result<ComparisonTables> run_comparison(const std::vector<ExperimentPlan>& plans);

struct ContinueRow {
    std::int64_t step = 0;  // lineage step of the continuation
    double objective = 0.0;
    double best_objective = 0.0;
};

// Takes the best checkpoint at or before the resource cut together with its
// hyperparameters and continues single-worker training for extra_steps.
Result<std::vector<ContinueRow>> continue_training(const SimResult& source,
                                                   std::int64_t cut_resource,
                                                   int extra_steps);

struct ScheduleSegment {
    TrialId trial_id = 0;
    int generation = 0;
    std::int64_t start_step = 0;
    std::int64_t end_step = 0;
    HParams hparams;
};

// Root-to-target lineage walk: each ancestor's hyperparameters over its step
// interval, i.e. the dynamic schedule the study discovered.
Result<std::vector<ScheduleSegment>> extract_schedule(const std::vector<Trial>& trials,
                                                      TrialId target);

struct SemRow {
    std::string method;
    std::int64_t resource = 0;
    double mean = 0.0;
    double sem = 0.0;
};

// Repeats each plan with its first `repeats` seeds and reports the standard
// error of the mean best objective at `levels` evenly spaced resource levels.
Result<std::vector<SemRow>> sensitivity(const std::vector<ExperimentPlan>& plans,
                                        int repeats, int levels = 10);

struct ScalabilityRow {
    int population = 0;
    int workers = 0;
    int generations = 0;
    std::int64_t resource = 0;
    double sim_time = 0.0;
    double generations_per_time = 0.0;
    double resource_per_generation = 0.0;
};

Result<std::vector<ScalabilityRow>> scalability(const ExperimentPlan& base,
                                                const std::vector<int>& populations,
                                                const std::vector<int>& worker_counts);

struct AblationRow {
    std::string strategy;
    std::uint64_t seed = 0;
    double best_objective = 0.0;
};

// Matched-seed studies differing only in opponent strategy, run with
// heterogeneous simulated worker speeds derived from each seed.
Result<std::vector<AblationRow>> opponent_ablation(
    const ExperimentPlan& base, const std::vector<OpponentStrategy>& strategies,
    const std::vector<std::uint64_t>& seeds);

// Deterministic CSV writer: fixed header, one line per row, doubles printed
// with round-trip precision. Returns false on I/O failure.
bool write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
std::string csv_double(double v);

// Full evaluation suite driven by a plan file; writes resource_curve.csv,
// step_curve.csv, continue.csv, schedule.csv, sem.csv, scalability.csv and
// ablation.csv under out_dir.
Result<Ack> run_bench_suite(const Json& suite, const std::string& out_dir);

}  // namespace pbt
