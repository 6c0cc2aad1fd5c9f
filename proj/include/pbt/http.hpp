#pragma once

#include <memory>
#include <string>
#include <thread>

#include "pbt/client.hpp"
#include "pbt/service.hpp"

namespace pbt {

// JSON-over-HTTP wire protocol: one POST endpoint per request kind, bodies
// mirroring the study-model schema. Error responses carry
// {"status": "error", "code": <machine readable>, "reason": <text>}.
class HttpServer {
public:
    explicit HttpServer(StudyService& service);
    ~HttpServer();

    // Binds and serves on a background thread. Returns the bound port
    // (useful with port = 0 for an ephemeral port), or -1 on failure.
    int start(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class HttpServiceClient : public ServiceClient {
public:
    HttpServiceClient(const std::string& host, int port, int max_retries = 3);
    ~HttpServiceClient() override;

    Result<std::string> create_study(const StudyConfig& config) override;
    Result<TrialResponse> request_trial(const std::string& study_id,
                                        const std::string& worker_id) override;
    Result<Ack> report_measurement(const std::string& study_id, TrialId trial_id,
                                   const Measurement& measurement) override;
    Result<Ack> complete_trial(const std::string& study_id, TrialId trial_id,
                               const std::string& final_checkpoint_path) override;
    Result<Ack> stop_trial(const std::string& study_id, TrialId trial_id) override;
    Result<StudyStatus> get_study(const std::string& study_id) override;
    Result<std::vector<Trial>> list_trials(const std::string& study_id) override;

    Result<std::vector<TrialId>> poll_early_stops(const std::string& study_id);
    Result<RecoveryReport> recover_study(const std::string& study_id);

private:
    Result<Json> post(const std::string& endpoint, const Json& body);

    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace pbt
