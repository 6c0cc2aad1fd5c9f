#include "pbt/http.hpp"

#include <atomic>
#include <chrono>

#include <httplib.h>

#include "pbt/json_codec.hpp"

namespace pbt {

namespace {

int http_status(ServiceError::Code code) {
    switch (code) {
        case ServiceError::Code::kNotFound:
            return 404;
        case ServiceError::Code::kInvalidArgument:
            return 400;
        case ServiceError::Code::kInvalidState:
        case ServiceError::Code::kConflict:
        case ServiceError::Code::kOrdering:
        case ServiceError::Code::kIncompleteLineage:
            return 409;
        case ServiceError::Code::kInternal:
            return 500;
    }
    return 500;
}

ServiceError::Code code_from_string(const std::string& s) {
    if (s == "not_found") return ServiceError::Code::kNotFound;
    if (s == "invalid_argument") return ServiceError::Code::kInvalidArgument;
    if (s == "invalid_state") return ServiceError::Code::kInvalidState;
    if (s == "conflict") return ServiceError::Code::kConflict;
    if (s == "ordering") return ServiceError::Code::kOrdering;
    if (s == "incomplete_lineage") return ServiceError::Code::kIncompleteLineage;
    return ServiceError::Code::kInternal;
}

void write_error(httplib::Response& res, const ServiceError& err) {
    Json body{{"status", "error"}, {"code", to_string(err.code)}, {"reason", err.reason}};
    res.status = http_status(err.code);
    res.set_content(body.dump(), "application/json");
}

void write_ok(httplib::Response& res, Json body) {
    body["status"] = "ok";
    res.status = 200;
    res.set_content(body.dump(), "application/json");
}

template <typename Handler>
void handle(const httplib::Request& req, httplib::Response& res, Handler&& handler) {
    Json body;
    try {
        body = Json::parse(req.body);
    } catch (const std::exception& e) {
        write_error(res, {ServiceError::Code::kInvalidArgument,
                          std::string("malformed json: ") + e.what()});
        return;
    }
    try {
        handler(body, res);
    } catch (const std::exception& e) {
        write_error(res, {ServiceError::Code::kInvalidArgument, e.what()});
    }
}

Json to_json(const TrialResponse& response) {
    Json j;
    switch (response.kind) {
        case TrialResponse::Kind::kTrial:
            j["kind"] = "trial";
            j["trial"] = to_json(*response.trial);
            break;
        case TrialResponse::Kind::kDefer:
            j["kind"] = "defer";
            break;
        case TrialResponse::Kind::kStudyComplete:
            j["kind"] = "study_complete";
            break;
    }
    j["retry_delay_s"] = response.retry_delay_s;
    return j;
}

TrialResponse trial_response_from_json(const Json& j) {
    TrialResponse response;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "trial") {
        response.kind = TrialResponse::Kind::kTrial;
        response.trial = trial_from_json(j.at("trial"));
    } else if (kind == "defer") {
        response.kind = TrialResponse::Kind::kDefer;
    } else if (kind == "study_complete") {
        response.kind = TrialResponse::Kind::kStudyComplete;
    } else {
        throw std::invalid_argument("unknown trial response kind: " + kind);
    }
    if (j.contains("retry_delay_s")) {
        response.retry_delay_s = j.at("retry_delay_s").get<double>();
    }
    return response;
}

}  // namespace

struct HttpServer::Impl {
    explicit Impl(StudyService& service) : service(service) {}
    StudyService& service;
    httplib::Server server;
    std::thread thread;
    std::atomic<bool> running{false};
};

HttpServer::HttpServer(StudyService& service) : impl_(std::make_unique<Impl>(service)) {
    auto& svr = impl_->server;
    StudyService& svc = impl_->service;

    svr.Post("/create_study", [&svc](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&svc](const Json& body, httplib::Response& res) {
            auto result = svc.create_study(study_config_from_json(body.at("config")));
            if (!result.ok()) return write_error(res, result.error());
            write_ok(res, Json{{"study_id", result.value()}});
        });
    });

    svr.Post("/request_trial", [&svc](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&svc](const Json& body, httplib::Response& res) {
            auto result = svc.request_trial(body.at("study_id").get<std::string>(),
                                            body.at("worker_id").get<std::string>());
            if (!result.ok()) return write_error(res, result.error());
            write_ok(res, to_json(result.value()));
        });
    });

    svr.Post("/report_measurement",
             [&svc](const httplib::Request& req, httplib::Response& res) {
                 handle(req, res, [&svc](const Json& body, httplib::Response& res) {
                     auto result = svc.report_measurement(
                         body.at("study_id").get<std::string>(),
                         body.at("trial_id").get<TrialId>(),
                         measurement_from_json(body.at("measurement")));
                     if (!result.ok()) return write_error(res, result.error());
                     write_ok(res, Json::object());
                 });
             });

    svr.Post("/complete_trial", [&svc](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&svc](const Json& body, httplib::Response& res) {
            auto result = svc.complete_trial(
                body.at("study_id").get<std::string>(), body.at("trial_id").get<TrialId>(),
                body.at("final_checkpoint_path").get<std::string>());
            if (!result.ok()) return write_error(res, result.error());
            write_ok(res, Json::object());
        });
    });

    svr.Post("/stop_trial", [&svc](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&svc](const Json& body, httplib::Response& res) {
            auto result = svc.stop_trial(body.at("study_id").get<std::string>(),
                                         body.at("trial_id").get<TrialId>());
            if (!result.ok()) return write_error(res, result.error());
            write_ok(res, Json::object());
        });
    });

    svr.Post("/get_study", [&svc](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&svc](const Json& body, httplib::Response& res) {
            auto result = svc.get_study(body.at("study_id").get<std::string>());
            if (!result.ok()) return write_error(res, result.error());
            const StudyStatus& s = result.value();
            write_ok(res, Json{{"config", to_json(s.config)},
                               {"trial_count", s.trial_count},
                               {"completed_count", s.completed_count},
                               {"budget_mode", s.budget_mode},
                               {"complete", s.complete}});
        });
    });

    svr.Post("/list_trials", [&svc](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&svc](const Json& body, httplib::Response& res) {
            auto result = svc.list_trials(body.at("study_id").get<std::string>());
            if (!result.ok()) return write_error(res, result.error());
            Json trials = Json::array();
            for (const auto& t : result.value()) trials.push_back(to_json(t));
            write_ok(res, Json{{"trials", std::move(trials)}});
        });
    });

    svr.Post("/poll_early_stops",
             [&svc](const httplib::Request& req, httplib::Response& res) {
                 handle(req, res, [&svc](const Json& body, httplib::Response& res) {
                     auto result =
                         svc.poll_early_stops(body.at("study_id").get<std::string>());
                     if (!result.ok()) return write_error(res, result.error());
                     write_ok(res, Json{{"trial_ids", result.value()}});
                 });
             });

    svr.Post("/recover_study", [&svc](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&svc](const Json& body, httplib::Response& res) {
            auto result = svc.recover_study(body.at("study_id").get<std::string>());
            if (!result.ok()) return write_error(res, result.error());
            write_ok(res, Json{{"stopped_trial_ids", result.value().stopped_trial_ids}});
        });
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) return -1;
    } else if (!impl_->server.bind_to_port(host, port)) {
        return -1;
    }
    impl_->running = true;
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpServer::stop() {
    if (!impl_->running.exchange(false)) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

struct HttpServiceClient::Impl {
    Impl(const std::string& host, int port, int max_retries)
        : client(host, port), max_retries(max_retries) {
        client.set_keep_alive(true);
    }
    httplib::Client client;
    int max_retries;
};

HttpServiceClient::HttpServiceClient(const std::string& host, int port, int max_retries)
    : impl_(std::make_unique<Impl>(host, port, max_retries)) {}

HttpServiceClient::~HttpServiceClient() = default;

Result<Json> HttpServiceClient::post(const std::string& endpoint, const Json& body) {
    const std::string payload = body.dump();
    for (int attempt = 0;; ++attempt) {
        auto res = impl_->client.Post(endpoint, payload, "application/json");
        if (!res) {
            if (attempt >= impl_->max_retries) {
                return ServiceError{ServiceError::Code::kInternal,
                                    "transport failure on " + endpoint + ": " +
                                        httplib::to_string(res.error())};
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(50 << attempt));
            continue;
        }
        Json reply;
        try {
            reply = Json::parse(res->body);
        } catch (const std::exception& e) {
            return ServiceError{ServiceError::Code::kInternal,
                                std::string("malformed reply: ") + e.what()};
        }
        if (res->status != 200 || reply.value("status", "") != "ok") {
            return ServiceError{code_from_string(reply.value("code", "internal")),
                                reply.value("reason", "unknown error")};
        }
        return reply;
    }
}

Result<std::string> HttpServiceClient::create_study(const StudyConfig& config) {
    auto reply = post("/create_study", Json{{"config", to_json(config)}});
    if (!reply.ok()) return reply.error();
    return reply.value().at("study_id").get<std::string>();
}

Result<TrialResponse> HttpServiceClient::request_trial(const std::string& study_id,
                                                       const std::string& worker_id) {
    auto reply =
        post("/request_trial", Json{{"study_id", study_id}, {"worker_id", worker_id}});
    if (!reply.ok()) return reply.error();
    try {
        return trial_response_from_json(reply.value());
    } catch (const std::exception& e) {
        return ServiceError{ServiceError::Code::kInternal, e.what()};
    }
}

Result<Ack> HttpServiceClient::report_measurement(const std::string& study_id,
                                                  TrialId trial_id,
                                                  const Measurement& measurement) {
    auto reply = post("/report_measurement", Json{{"study_id", study_id},
                                                  {"trial_id", trial_id},
                                                  {"measurement", to_json(measurement)}});
    if (!reply.ok()) return reply.error();
    return Ack{};
}

Result<Ack> HttpServiceClient::complete_trial(const std::string& study_id, TrialId trial_id,
                                              const std::string& final_checkpoint_path) {
    auto reply = post("/complete_trial",
                      Json{{"study_id", study_id},
                           {"trial_id", trial_id},
                           {"final_checkpoint_path", final_checkpoint_path}});
    if (!reply.ok()) return reply.error();
    return Ack{};
}

Result<Ack> HttpServiceClient::stop_trial(const std::string& study_id, TrialId trial_id) {
    auto reply = post("/stop_trial", Json{{"study_id", study_id}, {"trial_id", trial_id}});
    if (!reply.ok()) return reply.error();
    return Ack{};
}

Result<StudyStatus> HttpServiceClient::get_study(const std::string& study_id) {
    auto reply = post("/get_study", Json{{"study_id", study_id}});
    if (!reply.ok()) return reply.error();
    try {
        const Json& j = reply.value();
        StudyStatus status;
        status.config = study_config_from_json(j.at("config"));
        status.trial_count = j.at("trial_count").get<std::size_t>();
        status.completed_count = j.at("completed_count").get<std::size_t>();
        status.budget_mode = j.at("budget_mode").get<bool>();
        status.complete = j.at("complete").get<bool>();
        return status;
    } catch (const std::exception& e) {
        return ServiceError{ServiceError::Code::kInternal, e.what()};
    }
}

Result<std::vector<Trial>> HttpServiceClient::list_trials(const std::string& study_id) {
    auto reply = post("/list_trials", Json{{"study_id", study_id}});
    if (!reply.ok()) return reply.error();
    try {
        std::vector<Trial> trials;
        for (const Json& t : reply.value().at("trials")) {
            trials.push_back(trial_from_json(t));
        }
        return trials;
    } catch (const std::exception& e) {
        return ServiceError{ServiceError::Code::kInternal, e.what()};
    }
}

Result<std::vector<TrialId>> HttpServiceClient::poll_early_stops(
    const std::string& study_id) {
    auto reply = post("/poll_early_stops", Json{{"study_id", study_id}});
    if (!reply.ok()) return reply.error();
    return reply.value().at("trial_ids").get<std::vector<TrialId>>();
}

Result<RecoveryReport> HttpServiceClient::recover_study(const std::string& study_id) {
    auto reply = post("/recover_study", Json{{"study_id", study_id}});
    if (!reply.ok()) return reply.error();
    RecoveryReport report;
    report.stopped_trial_ids =
        reply.value().at("stopped_trial_ids").get<std::vector<TrialId>>();
    return report;
}

}  // namespace pbt
