#pragma once

#include <string>

#include "pbt/service.hpp"

namespace pbt {

// Client-side view of the controller. Workers and the bench talk to this
// interface; it is backed either by an in-process StudyService or by the
// HTTP wire protocol.
class ServiceClient {
public:
    virtual ~ServiceClient() = default;
    virtual Result<std::string> create_study(const StudyConfig& config) = 0;
    virtual Result<TrialResponse> request_trial(const std::string& study_id,
                                                const std::string& worker_id) = 0;
    virtual Result<Ack> report_measurement(const std::string& study_id, TrialId trial_id,
                                           const Measurement& measurement) = 0;
    virtual Result<Ack> complete_trial(const std::string& study_id, TrialId trial_id,
                                       const std::string& final_checkpoint_path) = 0;
    virtual Result<Ack> stop_trial(const std::string& study_id, TrialId trial_id) = 0;
    virtual Result<StudyStatus> get_study(const std::string& study_id) = 0;
    virtual Result<std::vector<Trial>> list_trials(const std::string& study_id) = 0;
};

class InProcessClient : public ServiceClient {
public:
    explicit InProcessClient(StudyService& service) : service_(service) {}
    Result<std::string> create_study(const StudyConfig& config) override {
        return service_.create_study(config);
    }
    Result<TrialResponse> request_trial(const std::string& study_id,
                                        const std::string& worker_id) override {
        return service_.request_trial(study_id, worker_id);
    }
    Result<Ack> report_measurement(const std::string& study_id, TrialId trial_id,
                                   const Measurement& measurement) override {
        return service_.report_measurement(study_id, trial_id, measurement);
    }
    Result<Ack> complete_trial(const std::string& study_id, TrialId trial_id,
                               const std::string& final_checkpoint_path) override {
        return service_.complete_trial(study_id, trial_id, final_checkpoint_path);
    }
    Result<Ack> stop_trial(const std::string& study_id, TrialId trial_id) override {
        return service_.stop_trial(study_id, trial_id);
    }
    Result<StudyStatus> get_study(const std::string& study_id) override {
        return service_.get_study(study_id);
    }
    Result<std::vector<Trial>> list_trials(const std::string& study_id) override {
        return service_.list_trials(study_id);
    }

private:
    StudyService& service_;
};

}  // namespace pbt
