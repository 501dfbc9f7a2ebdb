#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "qgen/error.hpp"
#include "qgen/pipeline.hpp"
#include "qgen/ranking.hpp"
#include "qgen/session.hpp"

namespace qgen {

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8080;                        // 0 picks a free port
    std::filesystem::path catalog_dir;      // empty: uploads only
    std::filesystem::path session_dir;      // where /save also writes .qsession files; empty: not written
    std::string cors_origin = "*";
    EngineConfig engine;                    // defaults for new sessions
    std::size_t threads = 8;
};

// HTTP status used for an engine error code.
int http_status_for(ErrorCode code) noexcept;

Json dataset_profile_json(const Dataset& dataset);
Json ranked_question_json(const SessionState& state, const QuestionCandidate& question, std::size_t rank);
Json counters_json(const SessionState& state);

class Service {
public:
    explicit Service(ServiceOptions options);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds the listening socket and returns the bound port. Throws
    // Error(IoFailure) when the address is taken.
    int bind();
    // Serves until stop(); bind() must have succeeded.
    void run();
    void stop();
    int port() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace qgen
