// Tuning service daemon: append-only study logs under --data-dir, JSON/HTTP
// API on --host/--port.
#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "pbt/checkpoint.hpp"
#include "pbt/http.hpp"
#include "pbt/store.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"population-based training service"};
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir = "./pbt-data";
    bool quiet = false;
    app.add_option("--host", host, "listen address")->capture_default_str();
    app.add_option("--port", port, "listen port (0 picks an ephemeral port)")
        ->capture_default_str();
    app.add_option("--data-dir", data_dir, "study log directory")->capture_default_str();
    app.add_flag("--quiet", quiet, "suppress startup banner");
    CLI11_PARSE(app, argc, argv);

    pbt::FileTrialStore store(data_dir);
    pbt::StudyService service(store);
    pbt::FileCheckpointStore checkpoints(data_dir + "/checkpoints");
    service.set_checkpoint_exists_hook(
        [&checkpoints](const std::string& path) { return checkpoints.exists(path); });

    pbt::HttpServer server(service);
    int bound = server.start(host, port);
    if (bound < 0) {
        std::cerr << "failed to bind " << host << ":" << port << "\n";
        return 1;
    }
    if (!quiet) {
        std::cout << "serving on " << host << ":" << bound << ", data in " << data_dir
                  << std::endl;
    }

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (g_stop == 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    server.stop();
    return 0;
}
