// Toy-problem worker: pulls trials from the service, trains, reports
// measurements and checkpoints until the study completes.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "pbt/http.hpp"
#include "pbt/worker.hpp"

int main(int argc, char** argv) {
    CLI::App app{"population-based training worker"};
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string study_id;
    std::string worker_id = "worker-0";
    std::string problem_file;
    std::string data_dir = "./pbt-data";
    int max_trials = -1;
    app.add_option("--host", host, "service address")->capture_default_str();
    app.add_option("--port", port, "service port")->capture_default_str();
    app.add_option("--study", study_id, "study id")->required();
    app.add_option("--worker-id", worker_id, "worker name")->capture_default_str();
    app.add_option("--problem", problem_file, "toy problem spec (json file)")->required();
    app.add_option("--data-dir", data_dir, "checkpoint directory root")
        ->capture_default_str();
    app.add_option("--max-trials", max_trials, "stop after N trials (-1 = unbounded)")
        ->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    std::ifstream in(problem_file);
    if (!in) {
        std::cerr << "cannot read " << problem_file << "\n";
        return 1;
    }
    pbt::ToyProblemSpec problem;
    try {
        problem = pbt::toy_problem_from_json(pbt::Json::parse(in));
    } catch (const std::exception& e) {
        std::cerr << "bad problem spec: " << e.what() << "\n";
        return 1;
    }

    pbt::HttpServiceClient client(host, port);
    pbt::FileCheckpointStore checkpoints(data_dir + "/checkpoints");
    int executed = pbt::run_worker_loop(study_id, worker_id, problem, client, checkpoints,
                                        max_trials);
    std::cout << worker_id << " executed " << executed << " trials\n";
    return 0;
}
