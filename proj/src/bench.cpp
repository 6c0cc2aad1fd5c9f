#include "pbt/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <tuple>

#include "pbt/client.hpp"
#include "pbt/evolution.hpp"
#include "pbt/store.hpp"

namespace pbt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lr_of(const HParams& hparams, const std::string& name) {
    auto it = hparams.find(name);
    if (it == hparams.end()) {
        throw std::invalid_argument("trial has no '" + name + "' hyperparameter");
    }
    if (std::holds_alternative<double>(it->second)) return std::get<double>(it->second);
    return static_cast<double>(std::get<std::int64_t>(it->second));
}

StudyConfig make_study_config(const ExperimentPlan& plan, std::uint64_t seed,
                              const std::string& study_id) {
    StudyConfig config;
    config.study_id = study_id;
    ParameterSpec lr;
    lr.name = plan.problem.lr_param;
    lr.kind = ParamKind::kFloat;
    lr.min_value = plan.lr_min;
    lr.max_value = plan.lr_max;
    lr.scale = Scale::kLog;
    config.specs = {lr};
    config.population_size = plan.population_size;
    config.worker_budget = plan.worker_budget;
    config.steps_per_trial = plan.steps_per_trial;
    config.fitness_mode = FitnessMode::kPriority;
    config.objective_directions = {Direction::kMinimize};
    config.opponent_strategy = plan.opponent_strategy;
    config.seed = seed;
    // Random search = no reproduction: every trial is a generation-0 sample.
    config.max_generations = plan.method == "random" ? 1 : 0;
    return config;
}

}  // namespace

Result<Ack> validate_plan(const ExperimentPlan& plan) {
    auto invalid = [](std::string reason) {
        return ServiceError{ServiceError::Code::kInvalidArgument, std::move(reason)};
    };
    if (plan.method != "pbt" && plan.method != "grid" && plan.method != "random") {
        return invalid("method must be pbt, grid or random: " + plan.method);
    }
    if (plan.method == "grid") {
        if (plan.grid_values.empty()) return invalid("grid method needs grid_values");
    } else {
        if (!(plan.lr_min > 0.0) || !(plan.lr_min < plan.lr_max)) {
            return invalid("range spec needs 0 < lr_min < lr_max");
        }
        if (plan.population_size < 1) return invalid("population_size must be >= 1");
    }
    if (plan.worker_budget < 1) return invalid("worker_budget must be >= 1");
    if (plan.steps_per_trial < 1) return invalid("steps_per_trial must be >= 1");
    if (plan.problem.eval_every < 1 || plan.problem.eval_every > plan.steps_per_trial) {
        return invalid("eval_every must be in [1, steps_per_trial]");
    }
    if (plan.total_resource_budget < 0) return invalid("negative resource budget");
    if (!plan.worker_speed_multipliers.empty() &&
        static_cast<int>(plan.worker_speed_multipliers.size()) != plan.worker_budget) {
        return invalid("need one speed multiplier per worker");
    }
    for (double m : plan.worker_speed_multipliers) {
        if (!(m > 0.0)) return invalid("speed multipliers must be positive");
    }
    return Ack{};
}

std::vector<double> heterogeneous_speeds(int workers, std::uint64_t seed) {
    RandomStream rng(derive_seed(seed, 0x5eedULL));
    std::vector<double> speeds(static_cast<std::size_t>(workers));
    for (double& s : speeds) s = 1.0 + 2.0 * rng.next_unit();
    return speeds;
}

SimResult simulate_study(const ExperimentPlan& plan, std::uint64_t seed) {
    SimResult result;
    result.plan = plan;
    result.seed = seed;
    result.checkpoints = std::make_shared<MemoryCheckpointStore>();

    const bool grid = plan.method == "grid";
    const int workers = plan.worker_budget;
    const std::string study_id = plan.label() + "-" + std::to_string(seed);

    MemoryTrialStore log;
    StudyService service(log, 0.0);
    result.config = make_study_config(plan, seed, study_id);
    if (grid) {
        result.config.population_size = static_cast<int>(plan.grid_values.size());
        result.config.max_generations = 1;
    } else {
        auto created = service.create_study(result.config);
        if (!created.ok()) {
            throw std::invalid_argument("invalid derived study config: " +
                                        created.error().reason);
        }
    }

    std::vector<double> speeds = plan.worker_speed_multipliers;
    if (speeds.empty()) speeds.assign(static_cast<std::size_t>(workers), 1.0);

    enum EventKind { kFree, kMeasure, kComplete };
    struct Event {
        double time;
        std::uint64_t seq;
        int worker;
        EventKind kind;
        bool operator>(const Event& o) const {
            return std::tie(time, seq) > std::tie(o.time, o.seq);
        }
    };
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue;
    std::uint64_t seq = 0;

    struct ActiveRun {
        Trial trial;
        std::vector<Measurement> measurements;
        std::vector<double> true_losses;
        std::vector<std::int64_t> global_steps;
        std::size_t next = 0;
        std::int64_t last_step = 0;
        std::int64_t steps_spent = 0;  // includes the failing window, if any
        bool failed = false;
    };
    std::vector<std::optional<ActiveRun>> active(static_cast<std::size_t>(workers));
    std::vector<bool> waiting(static_cast<std::size_t>(workers), false);

    std::int64_t committed = 0;
    std::size_t next_arm = 0;

    auto start_run = [&](int w, double t0, Trial trial) {
        ActiveRun run;
        ToyTrainer trainer(plan.problem, lr_of(trial.hparams, plan.problem.lr_param),
                           trial.worker_seed);
        if (trial.warm_start_checkpoint_path.has_value()) {
            trainer.warm_start(result.checkpoints->load(*trial.warm_start_checkpoint_path));
        }
        const int eval = plan.problem.eval_every;
        for (int s = eval; s <= plan.steps_per_trial; s += eval) {
            run.steps_spent = s;
            if (!trainer.run_steps(eval)) {
                run.failed = true;
                break;
            }
            Checkpoint ckpt = trainer.make_checkpoint(study_id, trial.trial_id, s);
            result.checkpoints->save(ckpt);
            Measurement m;
            m.step = s;
            m.objectives = {trainer.observed_objective(s)};
            m.checkpoint_path = ckpt.path;
            run.measurements.push_back(std::move(m));
            run.true_losses.push_back(trainer.validation_loss());
            run.global_steps.push_back(trainer.global_step());
        }
        for (const auto& m : run.measurements) {
            double at = t0 + plan.trial_overhead +
                        static_cast<double>(m.step) * speeds[static_cast<std::size_t>(w)];
            queue.push({at, seq++, w, kMeasure});
        }
        double end_offset =
            plan.trial_overhead +
            static_cast<double>(run.steps_spent) * speeds[static_cast<std::size_t>(w)];
        queue.push({t0 + end_offset, seq++, w, kComplete});
        run.trial = std::move(trial);
        active[static_cast<std::size_t>(w)] = std::move(run);
    };

    auto assign = [&](int w, double t) {
        if (committed + plan.steps_per_trial > plan.total_resource_budget) return;
        if (grid) {
            if (next_arm >= plan.grid_values.size()) return;
            Trial trial;
            trial.trial_id = static_cast<TrialId>(next_arm + 1);
            trial.study_id = study_id;
            trial.hparams[plan.problem.lr_param] = plan.grid_values[next_arm];
            trial.worker_seed = derive_seed(seed, trial.trial_id);
            ++next_arm;
            committed += plan.steps_per_trial;
            start_run(w, t, std::move(trial));
            return;
        }
        auto response = service.request_trial(study_id, "w" + std::to_string(w));
        if (!response.ok() || response.value().kind == TrialResponse::Kind::kStudyComplete) {
            return;
        }
        if (response.value().kind == TrialResponse::Kind::kDefer) {
            waiting[static_cast<std::size_t>(w)] = true;
            return;
        }
        committed += plan.steps_per_trial;
        start_run(w, t, std::move(*response.value().trial));
    };

    for (int w = 0; w < workers; ++w) queue.push({0.0, seq++, w, kFree});

    while (!queue.empty()) {
        Event ev = queue.top();
        queue.pop();
        result.sim_time = std::max(result.sim_time, ev.time);
        if (ev.kind == kFree) {
            assign(ev.worker, ev.time);
            continue;
        }
        ActiveRun& run = *active[static_cast<std::size_t>(ev.worker)];
        if (ev.kind == kMeasure) {
            const Measurement& m = run.measurements[run.next];
            result.resource_consumed += m.step - run.last_step;
            SimMeasurementEvent record;
            record.trial_id = run.trial.trial_id;
            record.generation = run.trial.generation;
            record.local_step = m.step;
            record.global_step = run.global_steps[run.next];
            record.resource = result.resource_consumed;
            record.time = ev.time;
            record.objective = *m.objectives[0];
            record.true_loss = run.true_losses[run.next];
            record.checkpoint_path = m.checkpoint_path;
            result.events.push_back(std::move(record));
            if (!grid) {
                service.report_measurement(study_id, run.trial.trial_id, m);
            }
            run.last_step = m.step;
            ++run.next;
            continue;
        }
        // completion: charge the unmeasured tail of the failing window and
        // hand back the steps a failed trial never ran, so the budget gate
        // tracks worker steps actually spent.
        result.resource_consumed += run.steps_spent - run.last_step;
        committed -= plan.steps_per_trial - run.steps_spent;
        if (grid) {
            run.trial.status = run.failed ? TrialStatus::kStopped : TrialStatus::kCompleted;
            if (!run.failed && !run.measurements.empty()) {
                run.trial.final_checkpoint_path = run.measurements.back().checkpoint_path;
                run.trial.measurements = run.measurements;
            }
            result.trials.push_back(run.trial);
        } else if (run.failed || run.measurements.empty()) {
            service.stop_trial(study_id, run.trial.trial_id);
        } else {
            service.complete_trial(study_id, run.trial.trial_id,
                                   run.measurements.back().checkpoint_path);
        }
        active[static_cast<std::size_t>(ev.worker)].reset();
        for (int w = 0; w < workers; ++w) {
            if (waiting[static_cast<std::size_t>(w)]) {
                waiting[static_cast<std::size_t>(w)] = false;
                queue.push({ev.time, seq++, w, kFree});
            }
        }
        queue.push({ev.time, seq++, ev.worker, kFree});
    }

    if (!grid) {
        auto listed = service.list_trials(study_id);
        if (listed.ok()) result.trials = std::move(listed.value());
    }
    result.generations_completed =
        last_complete_generation(result.trials, result.config.population_size) + 1;

    result.best_true_loss = kInf;
    std::map<TrialId, std::pair<std::int64_t, double>> final_loss;  // (step, loss)
    for (const auto& ev : result.events) {
        result.best_true_loss = std::min(result.best_true_loss, ev.true_loss);
        auto& slot = final_loss[ev.trial_id];
        if (ev.local_step >= slot.first) slot = {ev.local_step, ev.true_loss};
    }
    double best_final = kInf;
    for (const auto& t : result.trials) {
        if (!t.completed()) continue;
        auto it = final_loss.find(t.trial_id);
        if (it != final_loss.end() && it->second.second < best_final) {
            best_final = it->second.second;
            result.best_final_trial_id = t.trial_id;
        }
    }
    return result;
}

Result<ComparisonTables> run_comparison(const std::vector<ExperimentPlan>& plans) {
    if (plans.empty()) {
        return ServiceError{ServiceError::Code::kInvalidArgument, "no plans"};
    }
    const Json problem = to_json(plans.front().problem);
    for (const auto& plan : plans) {
        auto valid = validate_plan(plan);
        if (!valid.ok()) return valid.error();
        if (to_json(plan.problem) != problem) {
            return ServiceError{ServiceError::Code::kInvalidArgument,
                                "plans must share the same problem"};
        }
        if (plan.total_resource_budget != plans.front().total_resource_budget) {
            return ServiceError{ServiceError::Code::kInvalidArgument,
                                "plans must share the same resource budget"};
        }
        if (plan.seeds.empty()) {
            return ServiceError{ServiceError::Code::kInvalidArgument,
                                "plan '" + plan.label() + "' has no seeds"};
        }
    }

    ComparisonTables tables;
    for (const auto& plan : plans) {
        for (std::uint64_t seed : plan.seeds) {
            SimResult run = simulate_study(plan, seed);

            double best = kInf;
            std::int64_t best_step = 0;
            for (const auto& ev : run.events) {
                if (ev.true_loss < best) {
                    best = ev.true_loss;
                    best_step = ev.global_step;
                }
                tables.resource_curve.push_back(
                    {plan.label(), seed, ev.resource, best_step, best});
            }

            if (run.best_final_trial_id != 0) {
                std::map<TrialId, const Trial*> by_id;
                for (const auto& t : run.trials) by_id[t.trial_id] = &t;
                std::set<TrialId> lineage;
                const Trial* cursor = by_id.at(run.best_final_trial_id);
                while (cursor != nullptr) {
                    lineage.insert(cursor->trial_id);
                    cursor = cursor->parent_trial_id.has_value()
                                 ? by_id.at(*cursor->parent_trial_id)
                                 : nullptr;
                }
                std::vector<StepCurveRow> curve;
                for (const auto& ev : run.events) {
                    if (lineage.count(ev.trial_id) != 0) {
                        curve.push_back({plan.label(), seed, ev.global_step, ev.true_loss});
                    }
                }
                std::sort(curve.begin(), curve.end(),
                          [](const StepCurveRow& a, const StepCurveRow& b) {
                              return a.step < b.step;
                          });
                tables.step_curve.insert(tables.step_curve.end(), curve.begin(),
                                         curve.end());
            }
            tables.runs.push_back(std::move(run));
        }
    }
    return tables;
}

Result<std::vector<ContinueRow>> continue_training(const SimResult& source,
                                                   std::int64_t cut_resource,
                                                   int extra_steps) {
    if (cut_resource <= 0 || cut_resource > source.resource_consumed) {
        return ServiceError{ServiceError::Code::kInvalidArgument,
                            "cut resource outside the consumed budget"};
    }
    std::set<TrialId> stopped;
    for (const auto& t : source.trials) {
        if (t.status == TrialStatus::kStopped) stopped.insert(t.trial_id);
    }
    const SimMeasurementEvent* best = nullptr;
    for (const auto& ev : source.events) {
        if (ev.resource > cut_resource) continue;
        // A trial that was later stopped diverged; a lucky measurement on its
        // way up is not a state worth continuing from.
        if (stopped.count(ev.trial_id) != 0) continue;
        if (best == nullptr || ev.true_loss < best->true_loss) best = &ev;
    }
    if (best == nullptr) {
        return ServiceError{ServiceError::Code::kInvalidArgument,
                            "no measurements at or before the cut"};
    }
    const Trial* trial = nullptr;
    for (const auto& t : source.trials) {
        if (t.trial_id == best->trial_id) trial = &t;
    }
    if (trial == nullptr) {
        return ServiceError{ServiceError::Code::kInternal, "best trial missing"};
    }

    ToyTrainer trainer(source.plan.problem,
                       lr_of(trial->hparams, source.plan.problem.lr_param),
                       trial->worker_seed);
    trainer.warm_start(source.checkpoints->load(best->checkpoint_path));

    std::vector<ContinueRow> rows;
    double best_so_far = best->true_loss;
    const int eval = source.plan.problem.eval_every;
    for (int s = eval; s <= extra_steps; s += eval) {
        if (!trainer.run_steps(eval)) break;
        double loss = trainer.validation_loss();
        best_so_far = std::min(best_so_far, loss);
        rows.push_back({trainer.global_step(), loss, best_so_far});
    }
    return rows;
}

Result<std::vector<ScheduleSegment>> extract_schedule(const std::vector<Trial>& trials,
                                                      TrialId target) {
    std::map<TrialId, const Trial*> by_id;
    for (const auto& t : trials) by_id[t.trial_id] = &t;
    auto it = by_id.find(target);
    if (it == by_id.end()) {
        return ServiceError{ServiceError::Code::kNotFound,
                            "unknown trial " + std::to_string(target)};
    }
    if (!it->second->completed()) {
        return ServiceError{ServiceError::Code::kInvalidState,
                            "target trial is not completed"};
    }
    std::vector<const Trial*> lineage;
    for (const Trial* cursor = it->second; cursor != nullptr;) {
        lineage.push_back(cursor);
        cursor = cursor->parent_trial_id.has_value() ? by_id.at(*cursor->parent_trial_id)
                                                     : nullptr;
    }
    std::reverse(lineage.begin(), lineage.end());

    std::vector<ScheduleSegment> schedule;
    std::int64_t start = 0;
    for (const Trial* t : lineage) {
        std::int64_t span = t->measurements.empty() ? 0 : t->measurements.back().step;
        schedule.push_back({t->trial_id, t->generation, start, start + span, t->hparams});
        start += span;
    }
    return schedule;
}

Result<std::vector<SemRow>> sensitivity(const std::vector<ExperimentPlan>& plans,
                                        int repeats, int levels) {
    if (repeats < 2) {
        return ServiceError{ServiceError::Code::kInvalidArgument, "repeats must be >= 2"};
    }
    if (levels < 1) {
        return ServiceError{ServiceError::Code::kInvalidArgument, "levels must be >= 1"};
    }
    std::vector<SemRow> rows;
    for (const auto& plan : plans) {
        auto valid = validate_plan(plan);
        if (!valid.ok()) return valid.error();
        if (static_cast<int>(plan.seeds.size()) < repeats) {
            return ServiceError{ServiceError::Code::kInvalidArgument,
                                "plan '" + plan.label() + "' needs >= repeats seeds"};
        }
        // best-so-far per run at each level
        std::vector<std::vector<double>> best_at(static_cast<std::size_t>(levels));
        for (int r = 0; r < repeats; ++r) {
            SimResult run = simulate_study(plan, plan.seeds[static_cast<std::size_t>(r)]);
            double best = kInf;
            std::size_t next = 0;
            for (int l = 1; l <= levels; ++l) {
                std::int64_t cut = plan.total_resource_budget * l / levels;
                while (next < run.events.size() && run.events[next].resource <= cut) {
                    best = std::min(best, run.events[next].true_loss);
                    ++next;
                }
                best_at[static_cast<std::size_t>(l - 1)].push_back(best);
            }
        }
        for (int l = 1; l <= levels; ++l) {
            const auto& samples = best_at[static_cast<std::size_t>(l - 1)];
            bool usable = std::all_of(samples.begin(), samples.end(),
                                      [](double v) { return std::isfinite(v); });
            if (!usable) continue;
            double mean = 0.0;
            for (double v : samples) mean += v;
            mean /= static_cast<double>(samples.size());
            double var = 0.0;
            for (double v : samples) var += (v - mean) * (v - mean);
            var /= static_cast<double>(samples.size() - 1);
            double sem = std::sqrt(var / static_cast<double>(samples.size()));
            rows.push_back(
                {plan.label(), plan.total_resource_budget * l / levels, mean, sem});
        }
    }
    return rows;
}

Result<std::vector<ScalabilityRow>> scalability(const ExperimentPlan& base,
                                                const std::vector<int>& populations,
                                                const std::vector<int>& worker_counts) {
    if (base.seeds.empty()) {
        return ServiceError{ServiceError::Code::kInvalidArgument, "base plan needs a seed"};
    }
    std::vector<ScalabilityRow> rows;
    for (int population : populations) {
        for (int workers : worker_counts) {
            ExperimentPlan plan = base;
            plan.method = "pbt";
            plan.population_size = population;
            plan.worker_budget = workers;
            plan.worker_speed_multipliers.clear();
            auto valid = validate_plan(plan);
            if (!valid.ok()) return valid.error();
            SimResult run = simulate_study(plan, base.seeds.front());
            ScalabilityRow row;
            row.population = population;
            row.workers = workers;
            row.generations = run.generations_completed;
            row.resource = run.resource_consumed;
            row.sim_time = run.sim_time;
            row.generations_per_time =
                run.sim_time > 0.0 ? run.generations_completed / run.sim_time : 0.0;
            row.resource_per_generation =
                run.generations_completed > 0
                    ? static_cast<double>(run.resource_consumed) / run.generations_completed
                    : 0.0;
            rows.push_back(row);
        }
    }
    return rows;
}

Result<std::vector<AblationRow>> opponent_ablation(
    const ExperimentPlan& base, const std::vector<OpponentStrategy>& strategies,
    const std::vector<std::uint64_t>& seeds) {
    std::vector<AblationRow> rows;
    for (std::uint64_t seed : seeds) {
        std::vector<double> speeds = base.worker_speed_multipliers.empty()
                                         ? heterogeneous_speeds(base.worker_budget, seed)
                                         : base.worker_speed_multipliers;
        for (OpponentStrategy strategy : strategies) {
            ExperimentPlan plan = base;
            plan.method = "pbt";
            plan.opponent_strategy = strategy;
            plan.worker_speed_multipliers = speeds;
            auto valid = validate_plan(plan);
            if (!valid.ok()) return valid.error();
            SimResult run = simulate_study(plan, seed);
            rows.push_back({to_string(strategy), seed, run.best_true_loss});
        }
    }
    return rows;
}

std::string csv_double(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

bool write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) return false;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i != 0) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i != 0) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    return static_cast<bool>(out);
}

Json to_json(const ExperimentPlan& plan) {
    Json j{{"method", plan.method},
           {"population_size", plan.population_size},
           {"worker_budget", plan.worker_budget},
           {"steps_per_trial", plan.steps_per_trial},
           {"total_resource_budget", plan.total_resource_budget},
           {"repeats", plan.repeats},
           {"seeds", plan.seeds},
           {"opponent_strategy", to_string(plan.opponent_strategy)},
           {"problem", to_json(plan.problem)},
           {"lr_min", plan.lr_min},
           {"lr_max", plan.lr_max},
           {"trial_overhead", plan.trial_overhead}};
    if (!plan.name.empty()) j["name"] = plan.name;
    if (!plan.grid_values.empty()) j["grid_values"] = plan.grid_values;
    if (!plan.worker_speed_multipliers.empty()) {
        j["worker_speed_multipliers"] = plan.worker_speed_multipliers;
    }
    return j;
}

ExperimentPlan plan_from_json(const Json& j) {
    ExperimentPlan plan;
    plan.method = j.at("method").get<std::string>();
    if (j.contains("name")) plan.name = j.at("name").get<std::string>();
    if (j.contains("population_size")) {
        plan.population_size = j.at("population_size").get<int>();
    }
    if (j.contains("worker_budget")) plan.worker_budget = j.at("worker_budget").get<int>();
    if (j.contains("steps_per_trial")) {
        plan.steps_per_trial = j.at("steps_per_trial").get<int>();
    }
    if (j.contains("total_resource_budget")) {
        plan.total_resource_budget = j.at("total_resource_budget").get<std::int64_t>();
    }
    if (j.contains("repeats")) plan.repeats = j.at("repeats").get<int>();
    if (j.contains("seeds")) plan.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("opponent_strategy")) {
        plan.opponent_strategy =
            opponent_strategy_from_string(j.at("opponent_strategy").get<std::string>());
    }
    if (j.contains("problem")) plan.problem = toy_problem_from_json(j.at("problem"));
    if (j.contains("lr_min")) plan.lr_min = j.at("lr_min").get<double>();
    if (j.contains("lr_max")) plan.lr_max = j.at("lr_max").get<double>();
    if (j.contains("grid_values")) {
        plan.grid_values = j.at("grid_values").get<std::vector<double>>();
    }
    if (j.contains("worker_speed_multipliers")) {
        plan.worker_speed_multipliers =
            j.at("worker_speed_multipliers").get<std::vector<double>>();
    }
    if (j.contains("trial_overhead")) {
        plan.trial_overhead = j.at("trial_overhead").get<double>();
    }
    return plan;
}

Result<Ack> run_bench_suite(const Json& suite, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        return ServiceError{ServiceError::Code::kInternal,
                            "cannot create " + out_dir + ": " + ec.message()};
    }
    auto path_for = [&](const std::string& file) { return out_dir + "/" + file; };

    ExperimentPlan base;
    base.method = "pbt";
    if (suite.contains("problem")) base.problem = toy_problem_from_json(suite.at("problem"));
    base.seeds = suite.value("seeds", std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    base.total_resource_budget = suite.value("total_resource_budget", std::int64_t{50000});
    base.worker_budget = suite.value("workers", 5);
    base.steps_per_trial = suite.value("steps_per_trial", 500);
    base.population_size = suite.value("population_size", 20);
    base.lr_min = suite.value("lr_min", 1e-5);
    base.lr_max = suite.value("lr_max", 1e-1);

    ExperimentPlan pbt_small = base;
    pbt_small.name = "pbt-small";
    pbt_small.population_size = suite.value("small_population", 5);

    ExperimentPlan grid = base;
    grid.method = "grid";
    grid.name = "grid";
    grid.grid_values =
        suite.value("grid_values", std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4, 1e-5});
    grid.steps_per_trial = static_cast<int>(base.total_resource_budget /
                                            static_cast<std::int64_t>(grid.grid_values.size()));

    ExperimentPlan random = base;
    random.method = "random";
    random.name = "random";
    random.population_size = base.worker_budget;
    random.steps_per_trial =
        static_cast<int>(base.total_resource_budget / base.worker_budget);

    auto tables = run_comparison({base, pbt_small, grid, random});
    if (!tables.ok()) return tables.error();

    {
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : tables.value().resource_curve) {
            rows.push_back({r.method, std::to_string(r.seed), std::to_string(r.resource),
                            std::to_string(r.step), csv_double(r.best_objective)});
        }
        if (!write_csv(path_for("resource_curve.csv"),
                       {"method", "seed", "resource", "step", "best_objective"}, rows)) {
            return ServiceError{ServiceError::Code::kInternal, "write resource_curve.csv"};
        }
    }
    {
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : tables.value().step_curve) {
            rows.push_back({r.method, std::to_string(r.seed), std::to_string(r.step),
                            csv_double(r.objective)});
        }
        if (!write_csv(path_for("step_curve.csv"), {"method", "seed", "step", "objective"},
                       rows)) {
            return ServiceError{ServiceError::Code::kInternal, "write step_curve.csv"};
        }
    }

    // Continuation + schedule from the first pbt run.
    const SimResult& first = tables.value().runs.front();
    {
        auto rows = continue_training(first, base.total_resource_budget / 2,
                                      suite.value("continue_extra_steps", 5000));
        if (!rows.ok()) return rows.error();
        std::vector<std::vector<std::string>> out;
        for (const auto& r : rows.value()) {
            out.push_back({std::to_string(r.step), csv_double(r.objective),
                           csv_double(r.best_objective)});
        }
        if (!write_csv(path_for("continue.csv"), {"step", "objective", "best_objective"},
                       out)) {
            return ServiceError{ServiceError::Code::kInternal, "write continue.csv"};
        }
    }
    {
        std::vector<std::vector<std::string>> out;
        if (first.best_final_trial_id != 0) {
            auto schedule = extract_schedule(first.trials, first.best_final_trial_id);
            if (!schedule.ok()) return schedule.error();
            for (const auto& seg : schedule.value()) {
                out.push_back({std::to_string(seg.trial_id), std::to_string(seg.generation),
                               std::to_string(seg.start_step), std::to_string(seg.end_step),
                               csv_double(lr_of(seg.hparams, base.problem.lr_param))});
            }
        }
        if (!write_csv(path_for("schedule.csv"),
                       {"trial_id", "generation", "start_step", "end_step", "lr"}, out)) {
            return ServiceError{ServiceError::Code::kInternal, "write schedule.csv"};
        }
    }
    {
        int repeats = suite.value("sem_repeats",
                                  static_cast<int>(std::min<std::size_t>(base.seeds.size(),
                                                                         5)));
        auto rows = sensitivity({base, random}, repeats);
        if (!rows.ok()) return rows.error();
        std::vector<std::vector<std::string>> out;
        for (const auto& r : rows.value()) {
            out.push_back({r.method, std::to_string(r.resource), csv_double(r.mean),
                           csv_double(r.sem)});
        }
        if (!write_csv(path_for("sem.csv"), {"method", "resource", "mean", "sem"}, out)) {
            return ServiceError{ServiceError::Code::kInternal, "write sem.csv"};
        }
    }
    {
        auto populations = suite.value("scalability_populations", std::vector<int>{5, 20});
        auto workers = suite.value("scalability_workers", std::vector<int>{1, 2, 3, 4, 5});
        auto rows = scalability(base, populations, workers);
        if (!rows.ok()) return rows.error();
        std::vector<std::vector<std::string>> out;
        for (const auto& r : rows.value()) {
            out.push_back({std::to_string(r.population), std::to_string(r.workers),
                           std::to_string(r.generations), std::to_string(r.resource),
                           csv_double(r.sim_time), csv_double(r.generations_per_time),
                           csv_double(r.resource_per_generation)});
        }
        if (!write_csv(path_for("scalability.csv"),
                       {"population", "workers", "generations", "resource", "sim_time",
                        "generations_per_time", "resource_per_generation"},
                       out)) {
            return ServiceError{ServiceError::Code::kInternal, "write scalability.csv"};
        }
    }
    {
        auto rows = opponent_ablation(base,
                                      {OpponentStrategy::kPastGeneration,
                                       OpponentStrategy::kSameGeneration,
                                       OpponentStrategy::kAnyGeneration},
                                      base.seeds);
        if (!rows.ok()) return rows.error();
        std::vector<std::vector<std::string>> out;
        for (const auto& r : rows.value()) {
            out.push_back(
                {r.strategy, std::to_string(r.seed), csv_double(r.best_objective)});
        }
        if (!write_csv(path_for("ablation.csv"), {"strategy", "seed", "best_objective"},
                       out)) {
            return ServiceError{ServiceError::Code::kInternal, "write ablation.csv"};
        }
    }
    return Ack{};
}

}  // namespace pbt
