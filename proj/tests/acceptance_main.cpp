// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Every check is made against independently coded oracles or
// pinned directional thresholds; nothing here calls back into the evolution
// decision code it is judging except through the public service API.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pbt/bench.hpp"
#include "pbt/client.hpp"
#include "pbt/lifecycle.hpp"
#include "pbt/rng.hpp"
#include "pbt/service.hpp"
#include "pbt/store.hpp"
#include "pbt/worker.hpp"

using namespace pbt;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s criterion %2d (%s): %s\n", pass ? "PASS" : "FAIL", number,
                name.c_str(), detail.c_str());
    if (!pass) ++g_failures;
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Reference model: a from-scratch transcription of the suggestion algorithm
// for a flat search space of one log-uniform float plus one ordered discrete
// value. Used by criteria 1, 2 and 11.
// ---------------------------------------------------------------------------

struct RefTrial {
    TrialId id = 0;
    int generation = 0;
    std::optional<TrialId> parent;
    std::optional<TrialId> initiator;
    std::optional<std::string> warm_start;
    std::uint64_t worker_seed = 0;
    double lr = 0.0;
    double batch = 0.0;
    int status = 0;  // 0 pending, 1 completed, 2 stopped
    bool initiated = false;
    std::optional<std::uint64_t> completion_index;
    std::optional<double> objective;
    std::optional<std::string> final_path;
};

struct RefDecision {
    int kind = 0;  // 0 defer, 1 trial, 2 study complete
    RefTrial trial;
    std::optional<TrialId> opponent;  // the trial the initiator was compared to
};

struct RefStudy {
    int population = 5;
    int max_generations = 3;
    int window_k = 2;
    std::uint64_t seed = 0;
    double lr_min = 1e-5, lr_max = 1e-1;
    std::vector<double> batches{16, 32, 64, 128};
    std::vector<RefTrial> trials;
    std::uint64_t cursor = 0;
    std::uint64_t completion_counter = 0;

    int last_complete_generation() const {
        std::map<int, int> completed;
        for (const auto& t : trials) {
            if (t.status == 1) ++completed[t.generation];
        }
        int g = -1;
        while (true) {
            auto it = completed.find(g + 1);
            if (it == completed.end() || it->second < population) return g;
            ++g;
        }
    }

    RefTrial sample_seed(RandomStream& rng) {
        RefTrial t;
        t.id = static_cast<TrialId>(trials.size() + 1);
        t.generation = 0;
        t.worker_seed = derive_seed(seed, static_cast<std::uint64_t>(t.id));
        double u = rng.next_unit();
        t.lr = std::exp(std::log(lr_min) + u * (std::log(lr_max) - std::log(lr_min)));
        t.batch = batches[rng.next_below(batches.size())];
        return t;
    }

    RefDecision suggest() {
        RefDecision decision;
        RandomStream rng(seed, cursor);

        int live_seeds = 0;
        for (const auto& t : trials) {
            if (t.generation == 0 && t.status != 2) ++live_seeds;
        }
        if (last_complete_generation() < 0) {
            if (live_seeds >= population) return decision;  // defer
            decision.kind = 1;
            decision.trial = sample_seed(rng);
            cursor = rng.cursor();
            return decision;
        }
        if (last_complete_generation() >= max_generations - 1) {
            decision.kind = 2;
            return decision;
        }
        if (live_seeds < population) {  // replace a stopped seed
            decision.kind = 1;
            decision.trial = sample_seed(rng);
            cursor = rng.cursor();
            return decision;
        }

        const RefTrial* initiator = nullptr;
        for (const auto& t : trials) {
            if (t.status != 1 || t.initiated) continue;
            auto key = [](const RefTrial& x) {
                return std::make_tuple(x.generation, x.completion_index.value_or(0), x.id);
            };
            if (initiator == nullptr || key(t) < key(*initiator)) initiator = &t;
        }
        if (initiator == nullptr) return decision;                      // defer
        if (initiator->generation >= max_generations - 1) return decision;
        int completed_in_generation = 0;
        for (const auto& t : trials) {
            if (t.status == 1 && t.generation == initiator->generation) {
                ++completed_in_generation;
            }
        }
        if (completed_in_generation < population) return decision;      // defer

        std::vector<const RefTrial*> pool;  // past-generation window, size k
        for (const auto& t : trials) {
            if (t.status != 1 || t.id == initiator->id) continue;
            if (t.generation > initiator->generation ||
                t.generation < initiator->generation - window_k + 1) {
                continue;
            }
            pool.push_back(&t);
        }
        const RefTrial* winner = initiator;
        if (!pool.empty()) {
            const RefTrial* opponent = pool[rng.next_below(pool.size())];
            decision.opponent = opponent->id;
            if (*opponent->objective < *initiator->objective) winner = opponent;
        }

        RefTrial child;
        child.id = static_cast<TrialId>(trials.size() + 1);
        child.generation = initiator->generation + 1;
        child.parent = winner->id;
        child.initiator = initiator->id;
        child.warm_start = winner->final_path;
        child.worker_seed = derive_seed(seed, static_cast<std::uint64_t>(child.id));
        double multiplier = rng.next_below(2) == 0 ? 0.8 : 1.2;
        child.lr = std::clamp(winner->lr * multiplier, lr_min, lr_max);
        bool up = rng.next_below(2) != 0;
        auto it = std::find(batches.begin(), batches.end(), winner->batch);
        std::size_t index = static_cast<std::size_t>(it - batches.begin());
        if (up) {
            child.batch = index + 1 < batches.size() ? batches[index + 1] : winner->batch;
        } else {
            child.batch = index > 0 ? batches[index - 1] : winner->batch;
        }
        cursor = rng.cursor();
        decision.kind = 1;
        decision.trial = child;
        return decision;
    }

    void record_issue(const RefTrial& t) {
        if (t.initiator.has_value()) trials[*t.initiator - 1].initiated = true;
        trials.push_back(t);
    }
    void complete(TrialId id, double objective, const std::string& path) {
        RefTrial& t = trials[id - 1];
        t.status = 1;
        t.objective = objective;
        t.final_path = path;
        t.completion_index = completion_counter++;
    }
    void stop(TrialId id) {
        RefTrial& t = trials[id - 1];
        if (t.status == 2) return;
        t.status = 2;
        ++completion_counter;
        if (t.initiator.has_value()) trials[*t.initiator - 1].initiated = false;
    }
};

StudyConfig conformance_config(const std::string& id, std::uint64_t seed,
                               int worker_budget) {
    StudyConfig config;
    config.study_id = id;
    ParameterSpec lr;
    lr.name = "lr";
    lr.kind = ParamKind::kFloat;
    lr.min_value = 1e-5;
    lr.max_value = 1e-1;
    lr.scale = Scale::kLog;
    ParameterSpec batch;
    batch.name = "batch";
    batch.kind = ParamKind::kDiscrete;
    batch.feasible_values = {16, 32, 64, 128};
    config.specs = {lr, batch};
    config.population_size = 5;
    config.worker_budget = worker_budget;
    config.steps_per_trial = 100;
    config.max_generations = 3;
    config.seed = seed;
    return config;
}

std::string serialize_response(const Result<TrialResponse>& response) {
    std::ostringstream out;
    if (!response.ok()) {
        out << "error:" << static_cast<int>(response.error().code) << ":"
            << response.error().reason;
        return out.str();
    }
    const TrialResponse& r = response.value();
    out << "kind:" << static_cast<int>(r.kind) << ";delay:" << r.retry_delay_s;
    if (r.trial.has_value()) out << ";" << to_json(*r.trial).dump();
    return out.str();
}

template <typename T>
std::string serialize_ack(const Result<T>& result) {
    if (result.ok()) return "ok";
    return "error:" + std::to_string(static_cast<int>(result.error().code)) + ":" +
           result.error().reason;
}

// Runs one scripted schedule against a service; when `restart_each_request`
// is set, a fresh StudyService is built over the same log before every call.
// Returns the concatenated response bytes, and (optionally) checks every
// decision against the reference model.
struct ScriptOutcome {
    bool ok = true;
    std::string detail;
    std::string response_bytes;
    long reproduction_decisions = 0;
    long property_violations = 0;
};

ScriptOutcome run_conformance_script(std::uint64_t schedule, bool restart_each_request,
                                     bool check_against_reference) {
    ScriptOutcome outcome;
    MemoryTrialStore log;
    RandomStream script(derive_seed(777, schedule));
    int worker_budget = 1 + static_cast<int>(script.next_below(5));
    StudyConfig config = conformance_config("c", schedule + 1, worker_budget);

    auto make_service = [&] { return std::make_unique<StudyService>(log, 0.0); };
    auto service = make_service();
    auto fresh = [&]() -> StudyService& {
        if (restart_each_request) service = make_service();
        return *service;
    };

    auto fail = [&](const std::string& why) {
        outcome.ok = false;
        if (outcome.detail.empty()) {
            outcome.detail = "schedule " + std::to_string(schedule) + ": " + why;
        }
    };

    auto created = fresh().create_study(config);
    outcome.response_bytes += serialize_ack(created) + "\n";
    if (!created.ok()) {
        fail("create_study failed: " + created.error().reason);
        return outcome;
    }

    RefStudy ref;
    ref.seed = config.seed;
    std::vector<TrialId> pending;
    bool complete = false;
    for (int action = 0; action < 10000 && !complete; ++action) {
        std::uint64_t verb = pending.empty() ? 0 : script.next_below(8);
        if (verb <= 3) {  // request a trial
            auto response = fresh().request_trial("c", "w");
            outcome.response_bytes += serialize_response(response) + "\n";
            if (!response.ok()) {
                fail("request_trial error: " + response.error().reason);
                return outcome;
            }
            RefDecision expected = check_against_reference ? ref.suggest() : RefDecision{};
            if (check_against_reference) {
                int got = response.value().kind == TrialResponse::Kind::kDefer      ? 0
                          : response.value().kind == TrialResponse::Kind::kTrial    ? 1
                                                                                    : 2;
                if (got != expected.kind) {
                    fail("decision kind mismatch at action " + std::to_string(action));
                    return outcome;
                }
            }
            if (response.value().kind == TrialResponse::Kind::kStudyComplete) {
                complete = true;
                continue;
            }
            if (response.value().kind == TrialResponse::Kind::kDefer) continue;

            const Trial& got = *response.value().trial;
            if (check_against_reference) {
                const RefTrial& want = expected.trial;
                bool same =
                    got.trial_id == want.id && got.generation == want.generation &&
                    got.parent_trial_id == want.parent &&
                    got.initiator_parent_trial_id == want.initiator &&
                    got.warm_start_checkpoint_path == want.warm_start &&
                    got.worker_seed == want.worker_seed &&
                    std::get<double>(got.hparams.at("lr")) == want.lr &&
                    std::get<double>(got.hparams.at("batch")) == want.batch;
                if (!same) {
                    fail("suggestion mismatch: trial " + std::to_string(got.trial_id));
                    return outcome;
                }
                if (want.initiator.has_value()) {
                    ++outcome.reproduction_decisions;
                    // Evolution properties, checked on the live suggestion.
                    const RefTrial& parent = ref.trials[*want.parent - 1];
                    double lo = parent.lr * 0.8, hi = parent.lr * 1.2;
                    double lr = std::get<double>(got.hparams.at("lr"));
                    bool lr_ok = (lr == std::clamp(lo, 1e-5, 1e-1) ||
                                  lr == std::clamp(hi, 1e-5, 1e-1)) &&
                                 lr >= 1e-5 && lr <= 1e-1;
                    auto& batches = ref.batches;
                    auto pi = std::find(batches.begin(), batches.end(), parent.batch);
                    double batch = std::get<double>(got.hparams.at("batch"));
                    bool batch_ok = false;
                    for (long d : {-1L, 0L, 1L}) {
                        long j = (pi - batches.begin()) + d;
                        if (j >= 0 && j < static_cast<long>(batches.size()) &&
                            batches[static_cast<std::size_t>(j)] == batch) {
                            // boundary hold allows d==0 only at the edges
                            if (d != 0 || pi == batches.begin() ||
                                pi + 1 == batches.end()) {
                                batch_ok = true;
                            }
                        }
                    }
                    const RefTrial& initiator = ref.trials[*want.initiator - 1];
                    bool window_ok = true;
                    if (expected.opponent.has_value()) {
                        int og = ref.trials[*expected.opponent - 1].generation;
                        window_ok = og <= initiator.generation &&
                                    og >= initiator.generation - ref.window_k + 1;
                    }
                    if (!lr_ok || !batch_ok || !window_ok) ++outcome.property_violations;
                }
                ref.record_issue(want);
            }
            pending.push_back(got.trial_id);
        } else if (verb <= 6 || pending.size() < 2) {  // complete a pending trial
            std::size_t pick = script.next_below(pending.size());
            TrialId id = pending[pick];
            pending.erase(pending.begin() + static_cast<long>(pick));
            double objective = script.next_unit();
            Measurement m;
            m.step = 100;
            m.objectives = {objective};
            m.checkpoint_path = checkpoint_path("c", id, 100);
            auto measured = fresh().report_measurement("c", id, m);
            outcome.response_bytes += serialize_ack(measured) + "\n";
            auto completed = fresh().complete_trial("c", id, m.checkpoint_path);
            outcome.response_bytes += serialize_ack(completed) + "\n";
            if (!measured.ok() || !completed.ok()) {
                fail("completion failed for trial " + std::to_string(id));
                return outcome;
            }
            if (check_against_reference) ref.complete(id, objective, m.checkpoint_path);
        } else {  // stop a pending trial
            std::size_t pick = script.next_below(pending.size());
            TrialId id = pending[pick];
            pending.erase(pending.begin() + static_cast<long>(pick));
            auto stopped = fresh().stop_trial("c", id);
            outcome.response_bytes += serialize_ack(stopped) + "\n";
            if (!stopped.ok()) {
                fail("stop failed for trial " + std::to_string(id));
                return outcome;
            }
            if (check_against_reference) ref.stop(id);
        }
    }
    if (!complete) {
        fail("schedule did not finish within the action budget");
        return outcome;
    }

    // End-state conformance: lineage, generations and initiator marks.
    auto trials = fresh().list_trials("c");
    if (!trials.ok()) {
        fail("list_trials failed");
        return outcome;
    }
    if (check_against_reference) {
        if (trials.value().size() != ref.trials.size()) {
            fail("trial count mismatch");
            return outcome;
        }
        std::map<TrialId, int> live_children_of_initiator;
        for (std::size_t i = 0; i < ref.trials.size(); ++i) {
            const Trial& got = trials.value()[i];
            const RefTrial& want = ref.trials[i];
            int status = got.completed() ? 1 : got.status == TrialStatus::kStopped ? 2 : 0;
            if (status != want.status || got.generation != want.generation ||
                got.parent_trial_id != want.parent ||
                got.initiated_reproduction != want.initiated) {
                fail("end-state mismatch at trial " + std::to_string(want.id));
                return outcome;
            }
            if (got.initiator_parent_trial_id && got.status != TrialStatus::kStopped) {
                ++live_children_of_initiator[*got.initiator_parent_trial_id];
            }
        }
        // Every completed non-final trial initiated exactly one live child.
        for (const Trial& t : trials.value()) {
            if (!t.completed()) continue;
            if (t.generation >= config.max_generations - 1) continue;
            if (!t.initiated_reproduction || live_children_of_initiator[t.trial_id] != 1) {
                ++outcome.property_violations;
            }
        }
    }
    return outcome;
}

// Shared toy-benchmark plans (criteria 7, 8, 10).
ExperimentPlan acceptance_plan(int population) {
    ExperimentPlan plan;
    plan.method = "pbt";
    plan.population_size = population;
    plan.worker_budget = 5;
    plan.steps_per_trial = 500;
    plan.total_resource_budget = 50000;  // 5 workers x 10k steps
    plan.seeds = {1, 2, 3, 4, 5};
    plan.problem.kind = ToyProblemKind::kShiftedOptimum;
    plan.problem.dimension = 2;
    plan.problem.eval_every = 100;
    plan.problem.phase_length = 250;
    return plan;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

// ---------------------------------------------------------------------------

void criterion_1_and_2_and_11() {
    double start = now_seconds();
    bool conform = true;
    std::string detail;
    long reproductions = 0;
    long violations = 0;
    std::vector<std::string> baseline_bytes;
    for (std::uint64_t schedule = 0; schedule < 1000; ++schedule) {
        ScriptOutcome outcome = run_conformance_script(schedule, false, true);
        reproductions += outcome.reproduction_decisions;
        violations += outcome.property_violations;
        if (!outcome.ok && conform) {
            conform = false;
            detail = outcome.detail;
        }
        baseline_bytes.push_back(std::move(outcome.response_bytes));
    }
    double elapsed = now_seconds() - start;
    if (conform) {
        detail = "1000 randomized schedules match the reference decision-for-decision (" +
                 std::to_string(elapsed).substr(0, 4) + " s)";
    }
    report(1, "suggestion algorithm conformance", conform && elapsed < 10.0, detail);

    report(2, "evolution properties",
           violations == 0 && reproductions >= 10000,
           std::to_string(reproductions) + " reproduction decisions, " +
               std::to_string(violations) + " violations");

    // Criterion 11: restart the service before every request; responses must
    // not change by a byte.
    bool stateless = true;
    std::string stateless_detail = "responses byte-identical across restarts";
    for (std::uint64_t schedule = 0; schedule < 1000; ++schedule) {
        ScriptOutcome restarted = run_conformance_script(schedule, true, false);
        if (!restarted.ok || restarted.response_bytes != baseline_bytes[schedule]) {
            stateless = false;
            stateless_detail = "byte divergence in schedule " + std::to_string(schedule);
            break;
        }
    }
    report(11, "statelessness under restart fuzzing", stateless, stateless_detail);
}

void criterion_3() {
    bool pass = true;
    std::string detail = "no next-generation suggestion before the 5th completion";
    for (std::uint64_t seed = 1; seed <= 10 && pass; ++seed) {
        MemoryTrialStore log;
        StudyService service(log, 0.0);
        StudyConfig config = conformance_config("b", seed, /*worker_budget=*/1);
        if (!service.create_study(config).ok()) {
            pass = false;
            detail = "create failed";
            break;
        }
        std::map<int, int> completed;
        RandomStream objectives(derive_seed(99, seed));
        for (int action = 0; action < 200; ++action) {
            auto response = service.request_trial("b", "w");
            if (!response.ok()) {
                pass = false;
                detail = "request failed";
                break;
            }
            if (response.value().kind == TrialResponse::Kind::kStudyComplete) break;
            if (response.value().kind == TrialResponse::Kind::kDefer) {
                pass = false;
                detail = "single worker deferred";
                break;
            }
            const Trial& t = *response.value().trial;
            if (t.generation > 0 && completed[t.generation - 1] < 5) {
                pass = false;
                detail = "generation " + std::to_string(t.generation) +
                         " suggested after only " +
                         std::to_string(completed[t.generation - 1]) + " completions";
                break;
            }
            Measurement m;
            m.step = 100;
            m.objectives = {objectives.next_unit()};
            m.checkpoint_path = checkpoint_path("b", t.trial_id, 100);
            service.report_measurement("b", t.trial_id, m);
            service.complete_trial("b", t.trial_id, m.checkpoint_path);
            ++completed[t.generation];
        }
    }
    report(3, "budget-mode generation synchronization", pass, detail);
}

void criterion_4() {
    int passed_runs = 0;
    std::string detail;
    for (std::uint64_t run = 1; run <= 10; ++run) {
        MemoryTrialStore log;
        RandomStream script(derive_seed(4242, run));
        StudyConfig config = conformance_config("r", run, /*worker_budget=*/5);
        ToyProblemSpec problem;
        problem.kind = ToyProblemKind::kLrQuadratic;
        problem.dimension = 2;
        problem.eval_every = 100;
        MemoryCheckpointStore checkpoints;

        long kill_after = 3 + static_cast<long>(script.next_below(40));
        long requests_served = 0;
        {
            StudyService first(log, 0.0);
            if (!first.create_study(config).ok()) break;
            InProcessClient client(first);
            // Round-robin workers; abandon the process mid-flight.
            bool killed = false;
            while (!killed) {
                auto response = first.request_trial("r", "w");
                if (!response.ok()) break;
                if (response.value().kind == TrialResponse::Kind::kStudyComplete) break;
                if (++requests_served >= kill_after) {
                    killed = true;  // leave the last trial pending
                    break;
                }
                if (response.value().kind == TrialResponse::Kind::kDefer) continue;
                run_trial(*response.value().trial, problem, config.steps_per_trial,
                          client, checkpoints);
            }
        }

        StudyService second(log, 0.0);
        auto recovered = second.recover_study("r");
        if (!recovered.ok()) {
            detail = "recover failed on run " + std::to_string(run);
            continue;
        }
        InProcessClient client(second);
        run_worker_loop("r", "w", problem, client, checkpoints, /*max_trials=*/200);

        auto status = second.get_study("r");
        auto trials = second.list_trials("r");
        if (!status.ok() || !trials.ok() || !status.value().complete) {
            detail = "study did not complete after recovery on run " + std::to_string(run);
            continue;
        }
        std::map<int, int> completed;
        std::map<TrialId, int> live_children;
        bool counts_ok = true;
        for (const Trial& t : trials.value()) {
            if (t.completed()) ++completed[t.generation];
            if (t.initiator_parent_trial_id && t.status != TrialStatus::kStopped) {
                ++live_children[*t.initiator_parent_trial_id];
            }
        }
        for (int g = 0; g < 3; ++g) {
            if (completed[g] != 5) counts_ok = false;
        }
        for (const auto& [id, n] : live_children) {
            if (n > 1) counts_ok = false;
        }
        if (!counts_ok) {
            detail = "per-generation counts wrong on run " + std::to_string(run);
            continue;
        }
        ++passed_runs;
    }
    if (passed_runs == 10) detail = "10/10 interrupted studies recovered and completed";
    report(4, "kill/recover/resume", passed_runs == 10, detail);
}

void criterion_5() {
    MemoryTrialStore log;
    StudyService service(log, 0.0);
    MemoryCheckpointStore checkpoints;
    StudyConfig config = conformance_config("s", 12, /*worker_budget=*/1);
    config.steps_per_trial = 400;
    ToyProblemSpec problem;
    problem.kind = ToyProblemKind::kLrQuadratic;
    problem.dimension = 2;
    problem.drift_rate = 1e-4;
    problem.noise_scale = 1e-3;
    problem.eval_every = 200;
    bool pass = service.create_study(config).ok();
    std::string detail;
    InProcessClient client(service);
    run_worker_loop("s", "w", problem, client, checkpoints);
    auto trials = service.list_trials("s").value();

    const Trial* best = nullptr;
    for (const Trial& t : trials) {
        if (t.generation != 2 || !t.completed()) continue;
        if (best == nullptr ||
            *t.measurements.back().objectives[0] < *best->measurements.back().objectives[0]) {
            best = &t;
        }
    }
    if (best == nullptr) {
        report(5, "replay determinism", false, "source study produced no final trial");
        return;
    }

    std::set<TrialId> closure;
    std::map<TrialId, const Trial*> by_id;
    for (const Trial& t : trials) by_id[t.trial_id] = &t;
    for (TrialId id = best->trial_id;;) {
        closure.insert(id);
        auto parent = by_id.at(id)->parent_trial_id;
        if (!parent.has_value()) break;
        id = *parent;
    }

    pass = pass && replay_study(service, "s", {best->trial_id}, "s-replay").ok();
    run_worker_loop("s-replay", "w", problem, client, checkpoints);
    auto replayed = service.list_trials("s-replay").value();
    pass = pass && replayed.size() == closure.size();

    // Byte-for-byte measurement comparison; checkpoint paths are keyed by the
    // new study id and trial ids, so they are normalized out before hashing.
    auto normalized = [](const Trial& t) {
        std::string out;
        for (const Measurement& m : t.measurements) {
            Json j = to_json(m);
            j["checkpoint_path"] = "step-" + std::to_string(m.step);
            out += j.dump() + "\n";
        }
        return out;
    };
    int matched = 0;
    for (TrialId id : closure) {
        const Trial& original = *by_id.at(id);
        for (const Trial& copy : replayed) {
            if (copy.worker_seed != original.worker_seed) continue;
            if (normalized(copy) == normalized(original) &&
                copy.generation == original.generation) {
                ++matched;
            }
        }
    }
    pass = pass && matched == static_cast<int>(closure.size());
    detail = "lineage of " + std::to_string(closure.size()) +
             " trials replayed byte-identically (" + std::to_string(matched) + " matched)";

    // Subset replay: two targets, union of closures.
    std::vector<TrialId> finals;
    for (const Trial& t : trials) {
        if (t.generation == 2 && t.completed()) finals.push_back(t.trial_id);
    }
    if (finals.size() >= 2) {
        std::vector<TrialId> two{finals[0], finals[1]};
        std::set<TrialId> union_closure;
        for (TrialId target : two) {
            for (TrialId id = target;;) {
                union_closure.insert(id);
                auto parent = by_id.at(id)->parent_trial_id;
                if (!parent.has_value()) break;
                id = *parent;
            }
        }
        pass = pass && replay_study(service, "s", two, "s-subset").ok();
        run_worker_loop("s-subset", "w", problem, client, checkpoints);
        auto subset = service.list_trials("s-subset").value();
        pass = pass && subset.size() == union_closure.size();
    } else {
        pass = false;
        detail = "not enough final trials for subset replay";
    }
    report(5, "replay determinism", pass, detail);
}

void criterion_6() {
    long violations = 0;
    bool end_state_ok = true;
    for (std::uint64_t schedule = 0; schedule < 1000; ++schedule) {
        MemoryTrialStore log;
        StudyService service(log, 0.0);
        MemoryCheckpointStore checkpoints;
        RandomStream script(derive_seed(616, schedule));
        StudyConfig config = conformance_config("g", schedule + 1, /*worker_budget=*/2);
        config.population_size = 3;
        config.worker_budget = 2;
        config.max_generations = 2;
        if (!service.create_study(config).ok()) {
            ++violations;
            continue;
        }
        std::vector<Trial> pending;
        bool complete = false;
        for (int action = 0; action < 2000 && !complete; ++action) {
            std::uint64_t verb = pending.empty() ? 0 : script.next_below(8);
            if (verb <= 3) {  // request, then immediately verify warm start
                auto response = service.request_trial("g", "w");
                if (!response.ok()) break;
                if (response.value().kind == TrialResponse::Kind::kStudyComplete) {
                    complete = true;
                    continue;
                }
                if (response.value().kind == TrialResponse::Kind::kDefer) continue;
                const Trial& t = *response.value().trial;
                if (t.warm_start_checkpoint_path.has_value() &&
                    !checkpoints.exists(*t.warm_start_checkpoint_path)) {
                    ++violations;  // GC deleted a needed warm-start source
                }
                pending.push_back(t);
            } else if (verb <= 5 || action % 3 == 0) {  // complete a pending trial
                std::size_t pick = script.next_below(pending.size());
                Trial t = pending[static_cast<std::size_t>(pick)];
                pending.erase(pending.begin() + static_cast<long>(pick));
                std::string last;
                for (int step = 50; step <= 100; step += 50) {
                    Checkpoint ckpt;
                    ckpt.path = checkpoint_path("g", t.trial_id, step);
                    ckpt.variables = {{"theta", {{1}, {double(step)}}}};
                    ckpt.step = step;
                    ckpt.trial_id = t.trial_id;
                    checkpoints.save(ckpt);
                    Measurement m;
                    m.step = step;
                    m.objectives = {script.next_unit()};
                    m.checkpoint_path = ckpt.path;
                    service.report_measurement("g", t.trial_id, m);
                    last = ckpt.path;
                }
                service.complete_trial("g", t.trial_id, last);
            } else {  // garbage-collect mid-flight
                auto trials = service.list_trials("g").value();
                garbage_collect(config, trials, checkpoints,
                                /*keep_final=*/script.next_below(2) == 0);
            }
        }
        if (!complete) {
            ++violations;
            continue;
        }
        // Final keep-final pass: only final checkpoints survive.
        auto trials = service.list_trials("g").value();
        garbage_collect(config, trials, checkpoints, /*keep_final=*/true);
        std::set<std::string> finals;
        for (const Trial& t : trials) {
            if (t.final_checkpoint_path) finals.insert(*t.final_checkpoint_path);
        }
        for (const std::string& path : checkpoints.list("g")) {
            if (finals.count(path) == 0) end_state_ok = false;
        }
        for (const std::string& path : finals) {
            if (!checkpoints.exists(path)) end_state_ok = false;
        }
    }
    report(6, "garbage collection safety", violations == 0 && end_state_ok,
           std::to_string(violations) + " violations over 1000 interleavings; " +
               std::string(end_state_ok ? "keep-final end state clean"
                                        : "keep-final end state wrong"));
}

void criteria_7_8_9_10() {
    double start = now_seconds();
    ExperimentPlan pbt20 = acceptance_plan(20);
    ExperimentPlan pbt5 = acceptance_plan(5);
    pbt5.name = "pbt-small";
    ExperimentPlan grid = acceptance_plan(5);
    grid.method = "grid";
    grid.name = "grid";
    grid.grid_values = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    grid.steps_per_trial = 10000;
    ExperimentPlan random = acceptance_plan(5);
    random.method = "random";
    random.name = "random";
    random.steps_per_trial = 10000;

    auto tables = run_comparison({pbt20, pbt5, grid, random});
    if (!tables.ok()) {
        report(7, "toy convergence comparison", false, tables.error().reason);
        report(8, "seed sensitivity", false, "comparison failed");
        report(9, "scalability", false, "comparison failed");
        report(10, "opponent strategy ablation", false, "comparison failed");
        return;
    }
    std::map<std::pair<std::string, std::uint64_t>, const SimResult*> runs;
    for (const SimResult& run : tables.value().runs) {
        runs[{run.plan.label(), run.seed}] = &run;
    }

    int beats_baselines = 0;
    int big_population_wins = 0;
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        double p20 = runs[{"pbt", seed}]->best_true_loss;
        double p5 = runs[{"pbt-small", seed}]->best_true_loss;
        double g = runs[{"grid", seed}]->best_true_loss;
        double r = runs[{"random", seed}]->best_true_loss;
        if (p20 < g && p20 < r) ++beats_baselines;

        // Step-normalized: best objective at equal lineage depth.
        auto depth = [](const SimResult& run) {
            std::int64_t d = 0;
            for (const auto& e : run.events) d = std::max(d, e.global_step);
            return d;
        };
        std::int64_t common = std::min(depth(*runs[{"pbt", seed}]),
                                       depth(*runs[{"pbt-small", seed}]));
        auto best_at = [&](const SimResult& run) {
            double best = 1e300;
            for (const auto& e : run.events) {
                if (e.global_step <= common) best = std::min(best, e.true_loss);
            }
            return best;
        };
        if (best_at(*runs[{"pbt", seed}]) <= best_at(*runs[{"pbt-small", seed}])) {
            ++big_population_wins;
        }
        (void)p5;
    }
    double elapsed = now_seconds() - start;
    report(7, "toy convergence comparison",
           beats_baselines >= 4 && big_population_wins >= 3 && elapsed < 300.0,
           "population 20 beats grid+random in " + std::to_string(beats_baselines) +
               "/5 seeds; wins step-normalized vs population 5 in " +
               std::to_string(big_population_wins) + "/5");

    // Criterion 8: SEM at the final resource level over 5 matched runs.
    auto sem_rows = sensitivity({pbt20, random}, 5);
    bool sem_pass = false;
    std::string sem_detail = "sensitivity failed";
    if (sem_rows.ok()) {
        double sem_pbt = -1.0, sem_random = -1.0;
        for (const SemRow& row : sem_rows.value()) {
            if (row.resource != 50000) continue;
            if (row.method == "pbt") sem_pbt = row.sem;
            if (row.method == "random") sem_random = row.sem;
        }
        sem_pass = sem_pbt >= 0.0 && sem_random >= 0.0 && sem_pbt <= sem_random;
        char buffer[128];
        std::snprintf(buffer, sizeof(buffer), "SEM(pbt)=%.3g <= SEM(random)=%.3g",
                      sem_pbt, sem_random);
        sem_detail = buffer;
    }
    report(8, "seed sensitivity", sem_pass, sem_detail);

    // Criterion 9 runs on the failure-free quadratic so step accounting is
    // exact: work per generation must be population x steps_per_trial.
    ExperimentPlan quadratic = acceptance_plan(20);
    quadratic.problem = ToyProblemSpec{};
    quadratic.problem.dimension = 2;
    quadratic.problem.eval_every = 100;
    quadratic.seeds = {1};
    auto rows = scalability(quadratic, {5, 20}, {1, 2, 3, 4, 5});
    bool scal_pass = false;
    std::string scal_detail = "scalability failed";
    if (rows.ok()) {
        double work5 = 0.0, work20 = 0.0;
        std::vector<double> x, y;
        for (const ScalabilityRow& row : rows.value()) {
            if (row.population == 5) work5 = row.resource_per_generation;
            if (row.population == 20) {
                work20 = row.resource_per_generation;
                x.push_back(row.workers);
                y.push_back(row.generations_per_time);
            }
        }
        double n = static_cast<double>(x.size());
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            mx += x[i];
            my += y[i];
        }
        mx /= n;
        my /= n;
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
            syy += (y[i] - my) * (y[i] - my);
        }
        double slope = sxy / sxx;
        double ss_res = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double fit = my + slope * (x[i] - mx);
            ss_res += (y[i] - fit) * (y[i] - fit);
        }
        double r2 = 1.0 - ss_res / syy;
        double ratio = work20 / work5;
        scal_pass = r2 >= 0.95 && std::abs(ratio - 4.0) <= 0.1;
        char buffer[160];
        std::snprintf(buffer, sizeof(buffer),
                      "R^2(generations/time vs workers)=%.4f, work-per-generation "
                      "ratio=%.3f",
                      r2, ratio);
        scal_detail = buffer;
    }
    report(9, "scalability", scal_pass, scal_detail);

    // Criterion 10: heterogeneous-speed ablation, median over 5 seeds.
    auto ablation = opponent_ablation(pbt20,
                                      {OpponentStrategy::kPastGeneration,
                                       OpponentStrategy::kSameGeneration,
                                       OpponentStrategy::kAnyGeneration},
                                      {1, 2, 3, 4, 5});
    bool ablation_pass = false;
    std::string ablation_detail = "ablation failed";
    if (ablation.ok()) {
        std::map<std::string, std::vector<double>> by_strategy;
        for (const AblationRow& row : ablation.value()) {
            by_strategy[row.strategy].push_back(row.best_objective);
        }
        double past = median(by_strategy["past_generation"]);
        double same = median(by_strategy["same_generation"]);
        double any = median(by_strategy["any_generation"]);
        ablation_pass = past <= same && past <= any;
        char buffer[160];
        std::snprintf(buffer, sizeof(buffer),
                      "median(past)=%.3g vs median(same)=%.3g, median(any)=%.3g", past,
                      same, any);
        ablation_detail = buffer;
    }
    report(10, "opponent strategy ablation", ablation_pass, ablation_detail);
}

}  // namespace

int main() {
    criterion_1_and_2_and_11();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criteria_7_8_9_10();
    if (g_failures == 0) {
        std::printf("acceptance: all 11 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return 1;
}
