#include "pbt/worker.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "pbt/rng.hpp"

namespace pbt {

namespace {

// Squared-error ceiling: a state this far gone is declared divergent long
// before doubles overflow, so failure detection does not depend on how fast
// the learning rate blows up.
constexpr double kDivergenceThreshold = 1e100;
constexpr std::uint64_t kInitSalt = 0x696E6974ULL;
constexpr std::uint64_t kNoiseSalt = 0x6E6F697365ULL;

std::string to_string(ToyProblemKind kind) {
    return kind == ToyProblemKind::kLrQuadratic ? "lr_quadratic" : "shifted_optimum";
}

ToyProblemKind toy_kind_from_string(const std::string& s) {
    if (s == "lr_quadratic") return ToyProblemKind::kLrQuadratic;
    if (s == "shifted_optimum") return ToyProblemKind::kShiftedOptimum;
    throw std::invalid_argument("unknown toy problem kind: " + s);
}

double gaussian(std::uint64_t seed, std::uint64_t index) {
    RandomStream rng(seed, 2 * index);
    double u1 = rng.next_unit();
    double u2 = rng.next_unit();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

Json to_json(const ToyProblemSpec& p) {
    return Json{{"kind", to_string(p.kind)},
                {"dimension", p.dimension},
                {"noise_scale", p.noise_scale},
                {"drift_rate", p.drift_rate},
                {"phase_length", p.phase_length},
                {"curvature_low", p.curvature_low},
                {"curvature_high", p.curvature_high},
                {"drift_step", p.drift_step},
                {"eval_every", p.eval_every},
                {"lr_param", p.lr_param}};
}

ToyProblemSpec toy_problem_from_json(const Json& j) {
    ToyProblemSpec p;
    p.kind = toy_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("dimension")) p.dimension = j.at("dimension").get<int>();
    if (j.contains("noise_scale")) p.noise_scale = j.at("noise_scale").get<double>();
    if (j.contains("drift_rate")) p.drift_rate = j.at("drift_rate").get<double>();
    if (j.contains("phase_length")) p.phase_length = j.at("phase_length").get<int>();
    if (j.contains("curvature_low")) p.curvature_low = j.at("curvature_low").get<double>();
    if (j.contains("curvature_high")) p.curvature_high = j.at("curvature_high").get<double>();
    if (j.contains("drift_step")) p.drift_step = j.at("drift_step").get<double>();
    if (j.contains("eval_every")) p.eval_every = j.at("eval_every").get<int>();
    if (j.contains("lr_param")) p.lr_param = j.at("lr_param").get<std::string>();
    return p;
}

double problem_curvature(const ToyProblemSpec& problem, std::int64_t global_step) {
    if (problem.kind == ToyProblemKind::kLrQuadratic) return 1.0;
    std::int64_t phase = global_step / problem.phase_length;
    return (phase % 2 == 0) ? problem.curvature_low : problem.curvature_high;
}

double problem_drift(const ToyProblemSpec& problem) {
    return problem.kind == ToyProblemKind::kLrQuadratic ? problem.drift_rate
                                                        : problem.drift_step;
}

ToyTrainer::ToyTrainer(const ToyProblemSpec& problem, double learning_rate,
                       std::uint64_t worker_seed)
    : problem_(problem), learning_rate_(learning_rate), worker_seed_(worker_seed) {
    const int d = problem_.dimension;
    Tensor theta;
    theta.shape = {d};
    theta.values.resize(static_cast<std::size_t>(d));
    RandomStream init(derive_seed(worker_seed_, kInitSalt));
    for (double& v : theta.values) v = 0.5 + init.next_unit();
    variables_["theta"] = std::move(theta);
    variables_["global_step"] = Tensor{{1}, {0.0}};
}

RestoreReport ToyTrainer::warm_start(const Checkpoint& checkpoint) {
    return smart_restore(checkpoint, variables_);
}

std::int64_t ToyTrainer::global_step() const {
    return static_cast<std::int64_t>(variables_.at("global_step").values[0]);
}

bool ToyTrainer::run_steps(int n) {
    Tensor& theta = variables_.at("theta");
    const int d = problem_.dimension;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    const double drift = problem_drift(problem_);
    std::int64_t t = global_step();
    for (int i = 0; i < n; ++i, ++t) {
        const double c = problem_curvature(problem_, t);
        const double mu = drift * static_cast<double>(t) * inv_sqrt_d;  // per component
        double norm_sq = 0.0;
        for (double& v : theta.values) {
            double e = v - mu;
            v -= learning_rate_ * c * e;
            double e_next = v - mu;
            norm_sq += e_next * e_next;
        }
        if (!std::isfinite(norm_sq) || norm_sq > kDivergenceThreshold) {
            variables_.at("global_step").values[0] = static_cast<double>(t + 1);
            return false;
        }
    }
    variables_.at("global_step").values[0] = static_cast<double>(t);
    return true;
}

double ToyTrainer::validation_loss() const {
    const Tensor& theta = variables_.at("theta");
    const std::int64_t t = global_step();
    const double c = problem_curvature(problem_, t);
    const double mu = problem_drift(problem_) * static_cast<double>(t) /
                      std::sqrt(static_cast<double>(problem_.dimension));
    double norm_sq = 0.0;
    for (double v : theta.values) {
        double e = v - mu;
        norm_sq += e * e;
    }
    return 0.5 * c * norm_sq;
}

double ToyTrainer::observed_objective(std::int64_t local_step) const {
    double loss = validation_loss();
    if (problem_.noise_scale > 0.0) {
        loss += problem_.noise_scale *
                gaussian(derive_seed(worker_seed_, kNoiseSalt),
                         static_cast<std::uint64_t>(local_step));
    }
    return loss;
}

Checkpoint ToyTrainer::make_checkpoint(const std::string& study_id, TrialId trial_id,
                                       std::int64_t local_step) const {
    Checkpoint ckpt;
    ckpt.path = checkpoint_path(study_id, trial_id, local_step);
    ckpt.variables = variables_;
    ckpt.step = local_step;
    ckpt.trial_id = trial_id;
    return ckpt;
}

RunStatus run_trial(const Trial& trial, const ToyProblemSpec& problem,
                    int steps_per_trial, ServiceClient& client,
                    CheckpointStore& checkpoints) {
    auto it = trial.hparams.find(problem.lr_param);
    if (it == trial.hparams.end()) {
        throw std::invalid_argument("trial has no '" + problem.lr_param +
                                    "' hyperparameter");
    }
    double lr = std::holds_alternative<double>(it->second)
                    ? std::get<double>(it->second)
                    : static_cast<double>(std::get<std::int64_t>(it->second));

    ToyTrainer trainer(problem, lr, trial.worker_seed);
    if (trial.warm_start_checkpoint_path.has_value()) {
        trainer.warm_start(checkpoints.load(*trial.warm_start_checkpoint_path));
    }

    std::string last_path;
    for (int s = problem.eval_every; s <= steps_per_trial; s += problem.eval_every) {
        if (!trainer.run_steps(problem.eval_every)) {
            client.stop_trial(trial.study_id, trial.trial_id);
            return RunStatus::kFailed;
        }
        Checkpoint ckpt = trainer.make_checkpoint(trial.study_id, trial.trial_id, s);
        checkpoints.save(ckpt);
        Measurement m;
        m.step = s;
        m.objectives = {trainer.observed_objective(s)};
        m.checkpoint_path = ckpt.path;
        if (!client.report_measurement(trial.study_id, trial.trial_id, m).ok()) {
            return RunStatus::kAborted;
        }
        last_path = ckpt.path;
    }
    if (!client.complete_trial(trial.study_id, trial.trial_id, last_path).ok()) {
        return RunStatus::kAborted;
    }
    return RunStatus::kCompleted;
}

int run_worker_loop(const std::string& study_id, const std::string& worker_id,
                    const ToyProblemSpec& problem, ServiceClient& client,
                    CheckpointStore& checkpoints, int max_trials) {
    int executed = 0;
    while (max_trials < 0 || executed < max_trials) {
        auto response = client.request_trial(study_id, worker_id);
        if (!response.ok()) return executed;
        if (response.value().kind == TrialResponse::Kind::kStudyComplete) break;
        if (response.value().kind == TrialResponse::Kind::kDefer) {
            double delay = response.value().retry_delay_s;
            if (delay > 0) {
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            }
            continue;
        }
        auto status = client.get_study(study_id);
        if (!status.ok()) return executed;
        run_trial(*response.value().trial, problem, status.value().config.steps_per_trial,
                  client, checkpoints);
        ++executed;
    }
    return executed;
}

}  // namespace pbt
