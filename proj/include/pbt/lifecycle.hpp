#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pbt/checkpoint.hpp"
#include "pbt/service.hpp"
#include "pbt/study.hpp"

namespace pbt {

// Warm-start lineage of a set of target trials: the ancestor closure, with
// child -> parent edges and a deterministic topological execution order
// (parents first, ties broken by original suggestion order).
struct DependencyGraph {
    std::vector<TrialId> nodes;
    std::vector<std::pair<TrialId, TrialId>> edges;  // child -> parent
    std::vector<TrialId> execution_order;
};

Result<DependencyGraph> extract_dependency_graph(const std::vector<TrialId>& targets,
                                                 const std::vector<Trial>& trials);

// Builds a replay plan from a source study's trial list and registers it as
// a new study in replay mode: trials are re-issued in execution order with
// hyperparameters and worker seeds copied verbatim and warm-starts wired to
// the replayed counterparts of the original parents. The plan re-executes
// ancestors, so replay does not depend on retained intermediate checkpoints.
Result<std::string> replay_study(StudyService& service, const std::string& source_study_id,
                                 const std::vector<TrialId>& targets,
                                 const std::string& out_study_id);

struct GcReport {
    std::vector<std::string> deleted;
    std::vector<std::string> kept;
    bool dry_run = false;
    bool retryable = false;  // set when some deletes failed with I/O errors
};

// Deletes evaluated checkpoints. Final checkpoints of completed trials are
// retained while keep_final is set or while the trial could still be chosen
// as a parent under the study's opponent strategy (study incomplete and the
// trial's generation inside some future initiator's opponent window).
// Unevaluated checkpoints and pending warm-start sources are never deleted.
GcReport garbage_collect(const StudyConfig& config, const std::vector<Trial>& trials,
                         CheckpointStore& checkpoints, bool keep_final,
                         bool dry_run = false);

}  // namespace pbt
