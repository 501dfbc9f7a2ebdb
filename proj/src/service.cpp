#include "qgen/service.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <charconv>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <thread>
#include <sys/socket.h>

#include "httplib.h"
#include "qgen/error.hpp"

namespace qgen {

int http_status_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::EmptyInput:
        case ErrorCode::RaggedRows:
        case ErrorCode::DuplicateColumnName:
        case ErrorCode::InvalidArgument:
        case ErrorCode::CorruptSnapshot:
        case ErrorCode::BadCatalog:
            return 400;
        case ErrorCode::UnknownQuestion:
        case ErrorCode::UnknownColumn:
            return 404;
        case ErrorCode::VersionMismatch:
        case ErrorCode::DatasetMismatch:
            return 409;
        case ErrorCode::IoFailure:
            return 500;
        default:
            return 422;
    }
}

Json dataset_profile_json(const Dataset& dataset) {
    Json columns = Json::array();
    for (const auto& c : dataset.columns()) {
        Json col;
        col["name"] = c.name;
        col["kind"] = kind_name(c.kind);
        col["null_count"] = c.stats.null_count;
        col["distinct_count"] = c.stats.distinct_count;
        if (c.stats.numeric) {
            const auto& n = *c.stats.numeric;
            col["numeric"] = Json{{"min", n.min}, {"max", n.max}, {"mean", n.mean}, {"std", n.std},
                                  {"q1", n.q1},   {"q2", n.q2},   {"q3", n.q3}};
        }
        if (c.stats.categorical) {
            Json hist = Json::object();
            for (const auto& [label, count] : *c.stats.categorical) hist[label] = count;
            col["categories"] = std::move(hist);
        }
        if (c.stats.date) {
            col["date"] = Json{{"min", c.render_date(c.stats.date->min)},
                               {"max", c.render_date(c.stats.date->max)},
                               {"median", c.render_date(c.stats.date->median)}};
        }
        columns.push_back(std::move(col));
    }
    Json j;
    j["dataset_id"] = dataset.id();
    j["name"] = dataset.name();
    j["content_hash"] = dataset.content_hash();
    j["row_count"] = dataset.row_count();
    j["columns"] = std::move(columns);
    return j;
}

Json ranked_question_json(const SessionState& state, const QuestionCandidate& q, std::size_t rank) {
    Json ops = Json::array();
    for (const auto& [col, op] : q.operator_map) ops.push_back(Json{{"column", col}, {"operator", op}});
    Json j;
    j["rank"] = rank;
    j["id"] = q.id;
    j["text"] = q.surface_text;
    j["score"] = q.score;
    j["weight"] = question_weight(state, q);
    j["columns"] = q.columns;
    j["operators"] = std::move(ops);
    j["slot_values"] = q.slot_values;
    return j;
}

Json counters_json(const SessionState& state) {
    Json out = Json::array();
    const auto p = state.probabilities();
    for (std::size_t i = 0; i < state.columns.size(); ++i)
        out.push_back(Json{{"column", state.columns[i]}, {"counter", state.counters[i]}, {"probability", p[i]}});
    return out;
}

namespace {

struct HttpError {
    int status;
    std::string name;
    std::string message;
};

struct DatasetEntry {
    std::shared_ptr<const Dataset> dataset;
    std::string source;  // "catalog" or "upload"
};

struct CatalogFile {
    std::filesystem::file_time_type mtime;
    std::uintmax_t size = 0;
    std::shared_ptr<const Dataset> dataset;
    std::string warning;
};

struct SessionEntry {
    std::shared_mutex mutex;
    SessionState state;
    std::shared_ptr<const Dataset> dataset;
};

struct CachedResponse {
    int status;
    std::string body;
};

Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    try {
        return Json::parse(req.body);
    } catch (const Json::exception& e) {
        throw HttpError{400, "InvalidArgument", std::string("request body is not valid JSON: ") + e.what()};
    }
}

std::string string_field(const Json& body, const char* key) {
    if (!body.is_object() || !body.contains(key) || !body[key].is_string())
        throw HttpError{400, "InvalidArgument", std::string("missing string field '") + key + "'"};
    return body[key].get<std::string>();
}

std::size_t size_param(const httplib::Request& req, const char* key, std::size_t fallback) {
    if (!req.has_param(key)) return fallback;
    const auto raw = req.get_param_value(key);
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (ec != std::errc{} || ptr != raw.data() + raw.size())
        throw HttpError{400, "InvalidArgument", std::string("parameter '") + key + "' must be a non-negative integer"};
    return value;
}

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& name, const std::string& message) {
    send_json(res, status, Json{{"error", name}, {"message", message}});
}

}  // namespace

struct Service::Impl {
    ServiceOptions options;
    httplib::Server server;
    int bound_port = -1;
    std::atomic<bool> stop_requested{false};
    std::atomic<bool> running{false};

    std::mutex registry_mutex;
    std::vector<std::string> upload_order;
    std::map<std::string, DatasetEntry> uploads;
    std::map<std::string, CatalogFile> catalog_cache;  // by file name
    std::map<std::string, std::shared_ptr<SessionEntry>> sessions;
    std::size_t next_dataset = 1;
    std::size_t next_session = 1;

    std::mutex idempotency_mutex;
    std::map<std::string, CachedResponse> idempotency;

    explicit Impl(ServiceOptions o) : options(std::move(o)) { routes(); }

    // Caller holds registry_mutex.
    std::vector<std::pair<std::string, const CatalogFile*>> scan_catalog() {
        std::vector<std::pair<std::string, const CatalogFile*>> out;
        if (options.catalog_dir.empty()) return out;
        std::error_code ec;
        std::vector<std::filesystem::directory_entry> files;
        for (const auto& entry : std::filesystem::directory_iterator(options.catalog_dir, ec)) {
            if (entry.is_regular_file(ec)) files.push_back(entry);
        }
        std::sort(files.begin(), files.end(),
                  [](const auto& a, const auto& b) { return a.path().filename() < b.path().filename(); });
        std::map<std::string, CatalogFile> next;
        for (const auto& entry : files) {
            const auto name = entry.path().filename().string();
            const auto mtime = entry.last_write_time(ec);
            const auto size = entry.file_size(ec);
            auto cached = catalog_cache.find(name);
            if (cached != catalog_cache.end() && cached->second.mtime == mtime && cached->second.size == size) {
                next.emplace(name, cached->second);
                continue;
            }
            CatalogFile file{mtime, size, nullptr, {}};
            try {
                IngestOptions ingest;
                ingest.id = "cat-" + name;
                ingest.name = entry.path().stem().string();
                file.dataset = std::make_shared<const Dataset>(load_dataset_file(entry.path(), ingest));
            } catch (const Error& e) {
                file.warning = std::string(e.name()) + ": " + e.what();
            }
            next.emplace(name, std::move(file));
        }
        catalog_cache = std::move(next);
        for (const auto& entry : files) {
            const auto name = entry.path().filename().string();
            out.emplace_back(name, &catalog_cache.at(name));
        }
        return out;
    }

    // Caller holds registry_mutex.
    std::shared_ptr<const Dataset> find_dataset(const std::string& id) {
        if (auto it = uploads.find(id); it != uploads.end()) return it->second.dataset;
        for (const auto& [name, file] : scan_catalog())
            if (file->dataset && file->dataset->id() == id) return file->dataset;
        return nullptr;
    }

    std::shared_ptr<const Dataset> find_dataset_by_hash(const std::string& hash) {
        for (const auto& id : upload_order)
            if (uploads.at(id).dataset->content_hash() == hash) return uploads.at(id).dataset;
        for (const auto& [name, file] : scan_catalog())
            if (file->dataset && file->dataset->content_hash() == hash) return file->dataset;
        return nullptr;
    }

    std::shared_ptr<SessionEntry> session(const std::string& id) {
        std::lock_guard lock(registry_mutex);
        auto it = sessions.find(id);
        if (it == sessions.end()) throw HttpError{404, "UnknownSession", "no session '" + id + "'"};
        return it->second;
    }

    std::string register_session(SessionState state, std::shared_ptr<const Dataset> dataset) {
        auto entry = std::make_shared<SessionEntry>();
        std::lock_guard lock(registry_mutex);
        std::string id = "s-" + std::to_string(next_session++);
        state.session_id = id;
        entry->state = std::move(state);
        entry->dataset = std::move(dataset);
        sessions.emplace(id, std::move(entry));
        return id;
    }

    Json top_questions(const SessionState& state, std::size_t top) {
        const auto order = current_ranking(state);
        Json list = Json::array();
        for (std::size_t i = 0; i < order.size() && i < top; ++i)
            list.push_back(ranked_question_json(state, state.question_cache[order[i]], i + 1));
        return list;
    }

    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    Handler guarded(Handler handler, bool mutating) {
        return [this, handler = std::move(handler), mutating](const httplib::Request& req, httplib::Response& res) {
            std::string key;
            if (mutating && req.has_header("X-Request-Id")) {
                key = req.method + " " + req.path + " " + req.get_header_value("X-Request-Id");
                std::lock_guard lock(idempotency_mutex);
                if (auto it = idempotency.find(key); it != idempotency.end()) {
                    res.status = it->second.status;
                    res.set_content(it->second.body, "application/json");
                    return;
                }
            }
            try {
                handler(req, res);
            } catch (const HttpError& e) {
                send_error(res, e.status, e.name, e.message);
            } catch (const Error& e) {
                send_error(res, http_status_for(e.code()), std::string(e.name()), e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "InternalError", e.what());
            }
            if (!key.empty()) {
                std::lock_guard lock(idempotency_mutex);
                idempotency.emplace(key, CachedResponse{res.status, res.body});
            }
        };
    }

    void routes() {
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
        const auto threads = options.threads;
        server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };

        server.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", options.cors_origin);
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type, X-Request-Id");
        });
        server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
                       send_json(res, 200, Json{{"status", "ok"}});
                   }, false));

        server.Post("/datasets", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        upload(req, res);
                    }, true));

        server.Get("/catalog", guarded([this](const httplib::Request&, httplib::Response& res) {
                       catalog(res);
                   }, false));

        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        create_session(req, res);
                    }, true));

        server.Post("/sessions/resume", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        resume(req, res);
                    }, true));

        server.Get(R"(/sessions/([^/]+)/status)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       auto entry = session(req.matches[1]);
                       std::shared_lock lock(entry->mutex);
                       send_json(res, 200, Json{{"session_id", entry->state.session_id},
                                                {"status", "ready"},
                                                {"question_count", entry->state.question_cache.size()},
                                                {"iteration", entry->state.iteration}});
                   }, false));

        server.Get(R"(/sessions/([^/]+)/questions)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       auto entry = session(req.matches[1]);
                       std::shared_lock lock(entry->mutex);
                       const auto top = size_param(req, "top", entry->state.config.top_n);
                       send_json(res, 200, Json{{"session_id", entry->state.session_id},
                                                {"iteration", entry->state.iteration},
                                                {"questions", top_questions(entry->state, top)}});
                   }, false));

        server.Post(R"(/sessions/([^/]+)/select)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        auto entry = session(req.matches[1]);
                        const auto question_id = string_field(parse_body(req), "question_id");
                        std::unique_lock lock(entry->mutex);
                        record_selection(entry->state, question_id);
                        feedback_response(*entry, req, res);
                    }, true));

        server.Post(R"(/sessions/([^/]+)/columns)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        auto entry = session(req.matches[1]);
                        const auto column = string_field(parse_body(req), "column");
                        std::unique_lock lock(entry->mutex);
                        record_column_interest(entry->state, column);
                        feedback_response(*entry, req, res);
                    }, true));

        server.Get(R"(/sessions/([^/]+)/search)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       auto entry = session(req.matches[1]);
                       std::shared_lock lock(entry->mutex);
                       const auto limit = size_param(req, "limit", entry->state.config.top_n);
                       const auto& state = entry->state;
                       Json matches = Json::array();
                       std::size_t rank = 0;
                       for (auto i : search_questions(state, req.get_param_value("q"), limit))
                           matches.push_back(ranked_question_json(state, state.question_cache[i], ++rank));
                       send_json(res, 200, Json{{"session_id", state.session_id},
                                                {"query", req.get_param_value("q")},
                                                {"matches", std::move(matches)}});
                   }, false));

        server.Post(R"(/sessions/([^/]+)/save)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        auto entry = session(req.matches[1]);
                        std::unique_lock lock(entry->mutex);
                        Json out;
                        out["session_id"] = entry->state.session_id;
                        out["format_version"] = kSnapshotFormatVersion;
                        std::string document;
                        if (!options.session_dir.empty()) {
                            auto path = options.session_dir / (entry->state.session_id + std::string(kSnapshotExtension));
                            document = save_session(entry->state, *entry->dataset, path).document;
                            out["path"] = path.string();
                        } else {
                            document = serialize_session(entry->state, *entry->dataset);
                        }
                        out["snapshot"] = Json::parse(document);
                        send_json(res, 200, out);
                    }, true));
    }

    void feedback_response(SessionEntry& entry, const httplib::Request& req, httplib::Response& res) {
        const auto top = size_param(req, "top", entry.state.config.top_n);
        send_json(res, 200, Json{{"session_id", entry.state.session_id},
                                 {"iteration", entry.state.iteration},
                                 {"counters", counters_json(entry.state)},
                                 {"questions", top_questions(entry.state, top)}});
    }

    void upload(const httplib::Request& req, httplib::Response& res) {
        IngestOptions ingest;
        std::string bytes = req.body;
        std::string filename;
        if (req.is_multipart_form_data()) {
            if (!req.has_file("file")) throw HttpError{400, "InvalidArgument", "multipart upload needs a 'file' part"};
            const auto part = req.get_file_value("file");
            bytes = part.content;
            filename = part.filename;
        }
        if (req.has_param("delimiter")) {
            const auto d = req.get_param_value("delimiter");
            if (d == "\\t" || d == "tab") ingest.delimiter = '\t';
            else if (d.size() == 1) ingest.delimiter = d[0];
            else throw HttpError{400, "InvalidArgument", "delimiter must be a single character"};
        }
        if (req.has_param("name")) ingest.name = req.get_param_value("name");
        else if (!filename.empty()) ingest.name = std::filesystem::path(filename).stem().string();
        else ingest.name = "upload";
        if (req.has_param("title")) ingest.title = req.get_param_value("title");
        if (req.has_param("description")) ingest.description = req.get_param_value("description");

        Dataset parsed = load_dataset(bytes, ingest);

        std::lock_guard lock(registry_mutex);
        auto dataset = std::make_shared<const Dataset>("ds-" + std::to_string(next_dataset++), parsed.name(),
                                                       parsed.title(), parsed.description(), parsed.columns(),
                                                       parsed.row_count());
        uploads.emplace(dataset->id(), DatasetEntry{dataset, "upload"});
        upload_order.push_back(dataset->id());
        send_json(res, 201, Json{{"dataset_id", dataset->id()}, {"profile", dataset_profile_json(*dataset)}});
    }

    void catalog(httplib::Response& res) {
        std::lock_guard lock(registry_mutex);
        Json list = Json::array();
        auto summary = [](const Dataset& d, const char* source) {
            Json cols = Json::array();
            for (const auto& c : d.columns())
                cols.push_back(Json{{"name", c.name}, {"kind", kind_name(c.kind)}, {"null_count", c.stats.null_count}});
            return Json{{"dataset_id", d.id()}, {"name", d.name()},     {"source", source},
                        {"row_count", d.row_count()}, {"content_hash", d.content_hash()}, {"columns", std::move(cols)}};
        };
        for (const auto& [name, file] : scan_catalog()) {
            if (file->dataset) list.push_back(summary(*file->dataset, "catalog"));
            else list.push_back(Json{{"dataset_id", nullptr}, {"name", name}, {"source", "catalog"}, {"warning", file->warning}});
        }
        for (const auto& id : upload_order) list.push_back(summary(*uploads.at(id).dataset, "upload"));
        send_json(res, 200, list);
    }

    void create_session(const httplib::Request& req, httplib::Response& res) {
        const Json body = parse_body(req);
        const auto dataset_id = string_field(body, "dataset_id");
        EngineConfig config = options.engine;
        if (body.contains("config")) config = config_from_json(body["config"], config);
        if (body.contains("question_limit")) {
            if (!body["question_limit"].is_number_integer() || body["question_limit"].get<long long>() < 0)
                throw HttpError{400, "InvalidArgument", "question_limit must be a non-negative integer"};
            config.question_limit = body["question_limit"].get<std::size_t>();
        }
        if (config.question_limit == 0) throw HttpError{400, "InvalidArgument", "question_limit must be at least 1"};

        std::shared_ptr<const Dataset> dataset;
        {
            std::lock_guard lock(registry_mutex);
            dataset = find_dataset(dataset_id);
        }
        if (!dataset) throw HttpError{404, "UnknownDataset", "no dataset '" + dataset_id + "'"};

        auto result = run_pipeline(*dataset, config);
        std::vector<std::string> columns;
        for (auto i : result.selected) columns.push_back(dataset->column(i).name);
        const auto count = result.questions.size();
        auto state = SessionState::create("", dataset->id(), std::move(columns), std::move(result.questions), config);
        const auto id = register_session(std::move(state), dataset);
        send_json(res, 201, Json{{"session_id", id}, {"dataset_id", dataset->id()}, {"question_count", count},
                                 {"status", "ready"}});
    }

    void resume(const httplib::Request& req, httplib::Response& res) {
        const Json body = parse_body(req);
        std::string document;
        if (body.contains("snapshot")) {
            document = body["snapshot"].is_string() ? body["snapshot"].get<std::string>() : body["snapshot"].dump();
        } else {
            document = req.body;
        }
        const auto snap = peek_snapshot(document);
        std::shared_ptr<const Dataset> dataset;
        {
            std::lock_guard lock(registry_mutex);
            if (body.contains("dataset_id") && body["dataset_id"].is_string()) {
                const auto id = body["dataset_id"].get<std::string>();
                dataset = find_dataset(id);
                if (!dataset) throw HttpError{404, "UnknownDataset", "no dataset '" + id + "'"};
            } else {
                dataset = find_dataset_by_hash(snap.dataset_hash);
                if (!dataset)
                    throw Error(ErrorCode::DatasetMismatch,
                                "no loaded dataset has content hash " + snap.dataset_hash);
            }
        }
        auto state = restore_session(document, *dataset);
        const auto count = state.question_cache.size();
        const auto iteration = state.iteration;
        const auto id = register_session(std::move(state), dataset);
        send_json(res, 201, Json{{"session_id", id},
                                 {"restored_from", snap.session_id},
                                 {"dataset_id", dataset->id()},
                                 {"question_count", count},
                                 {"iteration", iteration},
                                 {"status", "ready"}});
    }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() { stop(); }

int Service::bind() {
    auto& s = impl_->server;
    const auto& o = impl_->options;
    int port = -1;
    if (o.port == 0) {
        port = s.bind_to_any_port(o.host);
    } else if (s.bind_to_port(o.host, o.port)) {
        port = o.port;
    }
    if (port < 0)
        throw Error(ErrorCode::IoFailure, "cannot bind " + o.host + ":" + std::to_string(o.port));
    impl_->bound_port = port;
    return port;
}

void Service::run() {
    impl_->running = true;
    if (!impl_->stop_requested) impl_->server.listen_after_bind();
    impl_->running = false;
}

void Service::stop() {
    if (!impl_) return;
    impl_->stop_requested = true;
    // run() may not have reached the accept loop yet
    while (impl_->running && !impl_->server.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    if (impl_->server.is_running()) impl_->server.stop();
}

int Service::port() const noexcept { return impl_->bound_port; }

}  // namespace qgen
