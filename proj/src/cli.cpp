#include "qgen/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <pthread.h>
#include <thread>

#include "CLI11.hpp"
#include "qgen/error.hpp"
#include "qgen/service.hpp"
#include "qgen/session.hpp"
#include "qgen/text.hpp"

namespace qgen::cli {

namespace {

struct EngineFlags {
    std::size_t limit = 500;
    std::size_t top = 10;
    std::size_t max_cols = 3;
    double alpha = 0.05;
    std::string entity = "records";
    std::size_t top_k_columns = 10;
    std::size_t min_slice_size = 2;
    double effect_floor = 0.5;
    std::string measures;
    bool significant_only = false;
    std::string delimiter = ",";
};

struct IoFlags {
    std::string input;
    std::string output;
    std::string selections;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string catalog_dir;
    std::string session_dir;
};

EngineConfig engine_config(const EngineFlags& f) {
    EngineConfig c;
    c.question_limit = f.limit;
    c.top_n = f.top;
    c.slicer.r_max = f.max_cols;
    c.slicer.alpha = f.alpha;
    c.entity = f.entity;
    c.top_k_columns = f.top_k_columns;
    c.slicer.min_slice_size = f.min_slice_size;
    c.slicer.effect_floor = f.effect_floor;
    if (!f.measures.empty()) c.measures = MeasureRegistry::parse(f.measures);
    c.significant_only = f.significant_only;
    if (c.question_limit == 0) throw Error(ErrorCode::InvalidArgument, "--limit must be at least 1");
    if (c.slicer.r_max == 0) throw Error(ErrorCode::InvalidArgument, "--max-cols must be at least 1");
    if (c.top_k_columns == 0) throw Error(ErrorCode::InvalidArgument, "--top-k-columns must be at least 1");
    if (!(c.slicer.alpha > 0 && c.slicer.alpha <= 1))
        throw Error(ErrorCode::InvalidArgument, "--alpha must lie in (0, 1]");
    return c;
}

char delimiter_of(const std::string& d) {
    if (d == "\\t" || d == "tab") return '\t';
    if (d.size() != 1) throw Error(ErrorCode::InvalidArgument, "--delimiter must be a single character");
    return d[0];
}

Dataset load_input(const IoFlags& io, const EngineFlags& f) {
    IngestOptions options;
    options.delimiter = delimiter_of(f.delimiter);
    return load_dataset_file(io.input, options);
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyInput:
        case ErrorCode::RaggedRows:
        case ErrorCode::DuplicateColumnName:
        case ErrorCode::IoFailure:
        case ErrorCode::InvalidArgument:
        case ErrorCode::CorruptSnapshot:
        case ErrorCode::BadCatalog:
            return kUsage;
        default:
            return kDomain;
    }
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(ErrorCode::IoFailure, "cannot write '" + path + "'");
    file << text;
}

SessionState start_session(const Dataset& dataset, const EngineConfig& config) {
    auto result = run_pipeline(dataset, config);
    std::vector<std::string> columns;
    for (auto i : result.selected) columns.push_back(dataset.column(i).name);
    return SessionState::create("cli", dataset.id(), std::move(columns), std::move(result.questions), config);
}

Json ranking_json(const SessionState& state, std::size_t top) {
    const auto order = current_ranking(state);
    Json list = Json::array();
    for (std::size_t i = 0; i < order.size() && i < top; ++i)
        list.push_back(ranked_question_json(state, state.question_cache[order[i]], i + 1));
    return list;
}

int generate(const IoFlags& io, const EngineFlags& flags, std::ostream& out) {
    const auto config = engine_config(flags);
    const auto dataset = load_input(io, flags);
    const auto state = start_session(dataset, config);
    Json doc;
    doc["dataset"] = Json{{"name", dataset.name()},
                          {"content_hash", dataset.content_hash()},
                          {"row_count", dataset.row_count()}};
    doc["columns"] = state.columns;
    doc["question_count"] = state.question_cache.size();
    doc["questions"] = ranking_json(state, state.question_cache.size());
    emit(doc.dump(2) + "\n", io.output, out);
    return kOk;
}

std::vector<std::string> read_selections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "'");
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        auto t = std::string(text::trim(line));
        if (t.empty() || t.front() == '#') continue;
        lines.push_back(std::move(t));
    }
    return lines;
}

int replay(const IoFlags& io, const EngineFlags& flags, std::ostream& out) {
    const auto config = engine_config(flags);
    const auto selections = read_selections(io.selections);
    const auto dataset = load_input(io, flags);
    auto state = start_session(dataset, config);

    Json trace = Json::array();
    auto snapshot = [&](const std::string& applied) {
        Json step;
        step["iteration"] = state.iteration;
        step["applied"] = applied.empty() ? Json(nullptr) : Json(applied);
        step["counters"] = counters_json(state);
        step["questions"] = ranking_json(state, config.top_n);
        trace.push_back(std::move(step));
    };
    snapshot("");
    for (const auto& item : selections) {
        constexpr std::string_view prefix = "column:";
        if (item.starts_with(prefix)) {
            record_column_interest(state, std::string_view(item).substr(prefix.size()));
        } else {
            record_selection(state, item);
        }
        snapshot(item);
    }
    emit(Json{{"dataset", dataset.name()}, {"trace", std::move(trace)}}.dump(2) + "\n", io.output, out);
    return kOk;
}

int serve(const IoFlags& io, const EngineFlags& flags, std::ostream& out, std::ostream& err) {
    ServiceOptions options;
    options.host = io.host;
    options.port = io.port;
    options.catalog_dir = io.catalog_dir;
    options.session_dir = io.session_dir;
    options.engine = engine_config(flags);
    if (!options.catalog_dir.empty() && !std::filesystem::is_directory(options.catalog_dir)) {
        err << "error: catalog directory '" << io.catalog_dir << "' does not exist\n";
        return kUsage;
    }

    sigset_t signals, previous;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, &previous);

    Service service(options);
    int port = 0;
    try {
        port = service.bind();
    } catch (const Error& e) {
        pthread_sigmask(SIG_SETMASK, &previous, nullptr);
        err << "error: " << e.what() << "\n";
        return kEnvironment;
    }
    out << "listening on " << options.host << ":" << port << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
    });
    service.run();
    // run() only returns once stop() was called from the waiter.
    waiter.join();
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    out << "stopped" << std::endl;
    return kOk;
}

void add_engine_flags(CLI::App& app, EngineFlags& f) {
    app.add_option("--limit", f.limit, "Number of questions to generate")->capture_default_str();
    app.add_option("--top", f.top, "Questions shown per ranking")->capture_default_str();
    app.add_option("--max-cols", f.max_cols, "Largest column subset per question")->capture_default_str();
    app.add_option("--alpha", f.alpha, "Significance level")->capture_default_str();
    app.add_option("--entity", f.entity, "Noun for the rows")->capture_default_str();
    app.add_option("--top-k-columns", f.top_k_columns, "Columns kept by interestingness")->capture_default_str();
    app.add_option("--min-slice-size", f.min_slice_size, "Smallest slice considered")->capture_default_str();
    app.add_option("--effect-floor", f.effect_floor, "Effect size for effect-only measures")->capture_default_str();
    app.add_option("--measures", f.measures, "Comma-separated interestingness measures");
    app.add_flag("--significant-only", f.significant_only, "Drop questions whose slice is not significant");
    app.add_option("--delimiter", f.delimiter, "Field delimiter")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generate ranked exploration questions from a table"};
    app.name(args.empty() ? "qgen" : std::filesystem::path(args[0]).filename().string());
    app.require_subcommand(1);
    app.set_config("--config", "", "Configuration file (TOML keys mirror the flags)")->envname("QGEN_CONFIG");

    EngineFlags flags;
    IoFlags io;
    add_engine_flags(app, flags);

    auto* gen = app.add_subcommand("generate", "Write the ranked questions for a table")->fallthrough();
    gen->add_option("--input", io.input, "Delimited input file")->required();
    gen->add_option("--output", io.output, "Output file (default stdout)");

    auto* rep = app.add_subcommand("replay", "Apply a list of selections and print each ranking")->fallthrough();
    rep->add_option("--input", io.input, "Delimited input file")->required();
    rep->add_option("--selections", io.selections, "One question id (or column:NAME) per line")->required();
    rep->add_option("--output", io.output, "Output file (default stdout)");

    auto* srv = app.add_subcommand("serve", "Run the HTTP service")->fallthrough();
    srv->add_option("--host", io.host, "Bind address")->capture_default_str();
    srv->add_option("--port", io.port, "Port (0 picks a free one)")->capture_default_str();
    srv->add_option("--catalog-dir", io.catalog_dir, "Directory of datasets listed by the catalog");
    srv->add_option("--session-dir", io.session_dir, "Directory for saved sessions");

    if (const char* env = std::getenv("QGEN_CONFIG"); env && *env && !std::filesystem::is_regular_file(env)) {
        err << "error: QGEN_CONFIG names a missing file: " << env << "\n";
        return kUsage;
    }

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("qgen");
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (gen->parsed()) return generate(io, flags, out);
        if (rep->parsed()) return replay(io, flags, out);
        return serve(io, flags, out, err);
    } catch (const Error& e) {
        err << "error: " << e.name() << ": " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kEnvironment;
    }
}

}  // namespace qgen::cli
