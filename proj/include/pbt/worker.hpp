#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "pbt/checkpoint.hpp"
#include "pbt/client.hpp"
#include "pbt/json_codec.hpp"
#include "pbt/study.hpp"

namespace pbt {

enum class ToyProblemKind { kLrQuadratic, kShiftedOptimum };

// Desk-scale training surrogate. Both problems are quadratics around a
// drifting optimum mu(t):
//
//   loss(theta, t) = 1/2 * c(t) * ||theta - mu(t)||^2
//   theta <- theta - lr * c(t) * (theta - mu(t))
//
// where t is the cumulative step along the trial lineage (carried in the
// checkpoint as the "global_step" variable) and mu(t) moves drift_step per
// step along the fixed unit direction (1,..,1)/sqrt(d).
//
// lr_quadratic: constant curvature 1.
//
// shifted_optimum: the curvature alternates between curvature_low and
// curvature_high every phase_length steps. The per-component tracking error
// obeys e' = (1 - lr*c) e - delta with delta = drift_step/sqrt(d), so its
// steady state is -delta/(lr*c) and the steady tracking loss of a constant
// learning rate in a phase of curvature c is drift_step^2 / (2 * lr^2 * c),
// stable only while lr*c < 2. A constant lr must keep lr*curvature_high
// below 2 to survive high phases, which caps how tightly it can track in
// either phase, and it pays a re-convergence transient at every boundary.
// The schedule lr(t) = 1/c(t) recentres on the optimum in one step after
// each switch, so its loss averaged over a full low+high cycle is strictly
// below that of every constant learning rate.
struct ToyProblemSpec {
    ToyProblemKind kind = ToyProblemKind::kLrQuadratic;
    int dimension = 2;
    double noise_scale = 0.0;  // observation noise on reported objectives
    double drift_rate = 0.0;   // lr_quadratic: per-step optimum motion
    int phase_length = 500;    // shifted_optimum phase width in global steps
    double curvature_low = 100.0;
    double curvature_high = 400.0;
    double drift_step = 1e-3;  // shifted_optimum per-step optimum motion
    int eval_every = 200;
    std::string lr_param = "lr";  // hyperparameter holding the learning rate
};

Json to_json(const ToyProblemSpec& problem);
ToyProblemSpec toy_problem_from_json(const Json& j);

double problem_curvature(const ToyProblemSpec& problem, std::int64_t global_step);
double problem_drift(const ToyProblemSpec& problem);  // per-step optimum motion

// The trainer + evaluator pair collapsed into one sequential loop. Model
// variables are "theta" [d] and "global_step" [1]; warm-starting restores
// them by name and shape via smart_restore.
class ToyTrainer {
public:
    ToyTrainer(const ToyProblemSpec& problem, double learning_rate,
               std::uint64_t worker_seed);

    RestoreReport warm_start(const Checkpoint& checkpoint);

    // Runs n optimizer steps; returns false once the state is non-finite or
    // the error norm crosses the divergence threshold (trial failure).
    bool run_steps(int n);

    // Noiseless loss at the current state: the "validation" objective.
    double validation_loss() const;
    // validation_loss plus seeded observation noise when noise_scale > 0.
    double observed_objective(std::int64_t local_step) const;

    Checkpoint make_checkpoint(const std::string& study_id, TrialId trial_id,
                               std::int64_t local_step) const;

    std::int64_t global_step() const;
    const std::map<std::string, Tensor>& variables() const { return variables_; }
    std::map<std::string, Tensor>& variables() { return variables_; }

private:
    ToyProblemSpec problem_;
    double learning_rate_;
    std::uint64_t worker_seed_;
    std::map<std::string, Tensor> variables_;
};

enum class RunStatus { kCompleted, kFailed, kAborted };

// Executes one pending trial end to end: construct, warm-start, train
// steps_per_trial steps, checkpoint + report every eval_every steps, then
// complete. Fully deterministic given (worker_seed, hparams, warm-start
// state). A non-finite state stops the trial (kFailed); persistent service
// errors abort, leaving the trial pending (kAborted).
RunStatus run_trial(const Trial& trial, const ToyProblemSpec& problem,
                    int steps_per_trial, ServiceClient& client,
                    CheckpointStore& checkpoints);

// Worker main loop: request, run, repeat until the study reports complete.
// Returns the number of trials executed.
int run_worker_loop(const std::string& study_id, const std::string& worker_id,
                    const ToyProblemSpec& problem, ServiceClient& client,
                    CheckpointStore& checkpoints, int max_trials = -1);

}  // namespace pbt
