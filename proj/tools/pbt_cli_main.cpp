// Admin CLI: study creation, checkpoint garbage collection, lineage replay
// and the benchmark suite. Operates directly on a data directory.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "pbt/bench.hpp"
#include "pbt/lifecycle.hpp"
#include "pbt/store.hpp"

namespace {

pbt::Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return pbt::Json::parse(in);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"population-based training admin tool"};
    app.require_subcommand(1);
    std::string data_dir = "./pbt-data";
    app.add_option("--data-dir", data_dir, "study log directory")->capture_default_str();

    auto* create = app.add_subcommand("create-study", "register a study from a json file");
    std::string config_file;
    create->add_option("--config", config_file, "study config json")->required();

    auto* gc = app.add_subcommand("gc", "delete no-longer-needed checkpoints");
    std::string gc_study;
    bool keep_final = false;
    bool dry_run = false;
    gc->add_option("--study", gc_study, "study id")->required();
    gc->add_flag("--keep-final", keep_final, "always retain final checkpoints");
    gc->add_flag("--dry-run", dry_run, "report without deleting");

    auto* replay = app.add_subcommand("replay", "re-execute a trial lineage as a new study");
    std::string replay_study;
    std::vector<pbt::TrialId> targets;
    std::string out_study;
    replay->add_option("--study", replay_study, "source study id")->required();
    replay->add_option("--targets", targets, "target trial ids")->required();
    replay->add_option("--out-study", out_study, "replay study id")->required();

    auto* bench = app.add_subcommand("bench", "benchmark suite");
    auto* bench_run = bench->add_subcommand("run", "run the suite and emit csv tables");
    std::string plan_file;
    std::string out_dir = "./bench-out";
    bench_run->add_option("--plan", plan_file, "suite plan json")->required();
    bench_run->add_option("--out", out_dir, "output directory")->capture_default_str();
    bench->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (create->parsed()) {
            pbt::FileTrialStore store(data_dir);
            pbt::StudyService service(store);
            auto result =
                service.create_study(pbt::study_config_from_json(read_json_file(config_file)));
            if (!result.ok()) {
                std::cerr << "create-study failed: " << result.error().reason << "\n";
                return 1;
            }
            std::cout << "created study " << result.value() << "\n";
        } else if (gc->parsed()) {
            pbt::FileTrialStore store(data_dir);
            pbt::StudyService service(store);
            pbt::FileCheckpointStore checkpoints(data_dir + "/checkpoints");
            auto status = service.get_study(gc_study);
            auto trials = service.list_trials(gc_study);
            if (!status.ok() || !trials.ok()) {
                std::cerr << "gc failed: unknown study " << gc_study << "\n";
                return 1;
            }
            auto report = pbt::garbage_collect(status.value().config, trials.value(),
                                               checkpoints, keep_final, dry_run);
            std::cout << (dry_run ? "would delete " : "deleted ") << report.deleted.size()
                      << " checkpoints, kept " << report.kept.size() << "\n";
            for (const auto& path : report.deleted) std::cout << "  - " << path << "\n";
            if (report.retryable) {
                std::cerr << "some deletions failed; rerun gc\n";
                return 1;
            }
        } else if (replay->parsed()) {
            pbt::FileTrialStore store(data_dir);
            pbt::StudyService service(store);
            auto result = pbt::replay_study(service, replay_study, targets, out_study);
            if (!result.ok()) {
                std::cerr << "replay failed: " << result.error().reason << "\n";
                return 1;
            }
            std::cout << "created replay study " << result.value() << "\n";
        } else if (bench_run->parsed()) {
            auto result = pbt::run_bench_suite(read_json_file(plan_file), out_dir);
            if (!result.ok()) {
                std::cerr << "bench failed: " << result.error().reason << "\n";
                return 1;
            }
            std::cout << "tables written to " << out_dir << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
