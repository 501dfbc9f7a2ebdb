#include "qgen/session.hpp"

#include <fstream>
#include <sstream>
#include <unistd.h>

#include "qgen/error.hpp"

namespace qgen {

namespace {

Json operand_to_json(const Operand& operand) {
    struct Visitor {
        Json operator()(double v) const { return Json{{"type", "number"}, {"value", v}}; }
        Json operator()(const std::string& s) const { return Json{{"type", "label"}, {"value", s}}; }
        Json operator()(const DateValue& d) const { return Json{{"type", "date"}, {"value", d.days}}; }
        Json operator()(const Interval& i) const { return Json{{"type", "interval"}, {"lo", i.lo}, {"hi", i.hi}}; }
    };
    return std::visit(Visitor{}, operand);
}

Operand operand_from_json(const Json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "number") return j.at("value").get<double>();
    if (type == "label") return j.at("value").get<std::string>();
    if (type == "date") return DateValue{j.at("value").get<std::int64_t>()};
    if (type == "interval") return Interval{j.at("lo").get<double>(), j.at("hi").get<double>()};
    throw Error(ErrorCode::CorruptSnapshot, "unknown operand type '" + type + "'");
}

[[noreturn]] void corrupt(const std::string& why) { throw Error(ErrorCode::CorruptSnapshot, why); }

Json parse_document(std::string_view document) {
    try {
        return Json::parse(document);
    } catch (const Json::exception& e) {
        corrupt(std::string("snapshot is not a valid document: ") + e.what());
    }
}

void check_version(const Json& doc) {
    if (!doc.is_object() || !doc.contains("format_version") || !doc["format_version"].is_number_integer())
        corrupt("snapshot has no format_version");
    const int version = doc["format_version"].get<int>();
    if (version != kSnapshotFormatVersion)
        throw Error(ErrorCode::VersionMismatch, "snapshot format_version " + std::to_string(version) +
                                                    " is not readable (expected " +
                                                    std::to_string(kSnapshotFormatVersion) + ")");
}

}  // namespace

Json config_to_json(const EngineConfig& c) {
    Json j;
    j["top_k_columns"] = c.top_k_columns;
    j["r_max"] = c.slicer.r_max;
    j["alpha"] = c.slicer.alpha;
    j["min_slice_size"] = c.slicer.min_slice_size;
    j["effect_floor"] = c.slicer.effect_floor;
    j["top_k_percent_values"] = c.slicer.top_k_percent_values;
    j["max_categories"] = c.slicer.max_categories;
    j["measures"] = c.measures.to_string();
    j["entity"] = c.entity;
    j["question_limit"] = c.question_limit;
    j["top_n"] = c.top_n;
    j["significant_only"] = c.significant_only;
    return j;
}

EngineConfig config_from_json(const Json& overrides, EngineConfig base) {
    if (overrides.is_null()) return base;
    if (!overrides.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be an object");
    try {
        for (const auto& [key, value] : overrides.items()) {
            if (key == "top_k_columns") base.top_k_columns = value.get<std::size_t>();
            else if (key == "r_max") base.slicer.r_max = value.get<std::size_t>();
            else if (key == "alpha") base.slicer.alpha = value.get<double>();
            else if (key == "min_slice_size") base.slicer.min_slice_size = value.get<std::size_t>();
            else if (key == "effect_floor") base.slicer.effect_floor = value.get<double>();
            else if (key == "top_k_percent_values") base.slicer.top_k_percent_values = value.get<std::vector<int>>();
            else if (key == "max_categories") base.slicer.max_categories = value.get<std::size_t>();
            else if (key == "measures") base.measures = MeasureRegistry::parse(value.get<std::string>());
            else if (key == "entity") base.entity = value.get<std::string>();
            else if (key == "question_limit") base.question_limit = value.get<std::size_t>();
            else if (key == "top_n") base.top_n = value.get<std::size_t>();
            else if (key == "significant_only") base.significant_only = value.get<bool>();
            else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad config value: ") + e.what());
    }
    if (base.top_k_columns == 0 || base.slicer.r_max == 0)
        throw Error(ErrorCode::InvalidArgument, "top_k_columns and r_max must be at least 1");
    if (!(base.slicer.alpha > 0 && base.slicer.alpha <= 1))
        throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
    for (int k : base.slicer.top_k_percent_values)
        if (k <= 0 || k > 100) throw Error(ErrorCode::InvalidArgument, "top_k_percent values must lie in [1, 100]");
    return base;
}

Json slice_to_json(const Slice& s) {
    Json j;
    j["subset_columns"] = s.subset_columns;
    j["subset_indices"] = s.subset_indices;
    j["fixed_column"] = s.fixed_column;
    j["fixed_index"] = s.fixed_index;
    j["measure"] = Json{{"op", measure_name(s.measure.op)}, {"percent", s.measure.percent}};
    Json preds = Json::array();
    for (const auto& p : s.predicates) {
        preds.push_back(Json{{"column", p.column_name},
                             {"column_index", p.column_index},
                             {"op", filter_name(p.op)},
                             {"operand", operand_to_json(p.operand)}});
    }
    j["predicates"] = std::move(preds);
    j["member_rows"] = s.member_rows;
    j["pseudo"] = s.pseudo;
    j["target_label"] = s.target_label;
    j["significance"] = Json{{"test_name", s.significance.test_name},
                             {"statistic", s.significance.statistic},
                             {"p_value", s.significance.p_value},
                             {"effect_size", s.significance.effect_size},
                             {"significant", s.significance.significant}};
    j["interestingness"] = s.interestingness;
    return j;
}

Slice slice_from_json(const Json& j) {
    Slice s;
    s.subset_columns = j.at("subset_columns").get<std::vector<std::string>>();
    s.subset_indices = j.at("subset_indices").get<std::vector<std::size_t>>();
    s.fixed_column = j.at("fixed_column").get<std::string>();
    s.fixed_index = j.at("fixed_index").get<std::size_t>();
    auto op = parse_measure(j.at("measure").at("op").get<std::string>());
    if (!op) corrupt("unknown measure operator");
    s.measure = Measure{*op, j.at("measure").at("percent").get<int>()};
    for (const auto& pj : j.at("predicates")) {
        auto fop = parse_filter(pj.at("op").get<std::string>());
        if (!fop) corrupt("unknown filter operator");
        s.predicates.push_back(SlicePredicate{pj.at("column").get<std::string>(), pj.at("column_index").get<std::size_t>(),
                                              *fop, operand_from_json(pj.at("operand"))});
    }
    s.member_rows = j.at("member_rows").get<std::vector<std::uint32_t>>();
    s.pseudo = j.at("pseudo").get<bool>();
    s.target_label = j.at("target_label").get<std::string>();
    const auto& sig = j.at("significance");
    s.significance.test_name = sig.at("test_name").get<std::string>();
    s.significance.statistic = sig.at("statistic").get<double>();
    s.significance.p_value = sig.at("p_value").get<double>();
    s.significance.effect_size = sig.at("effect_size").get<double>();
    s.significance.significant = sig.at("significant").get<bool>();
    s.interestingness = j.at("interestingness").get<double>();
    return s;
}

Json question_to_json(const QuestionCandidate& q) {
    Json j;
    j["id"] = q.id;
    j["columns"] = q.columns;
    Json map = Json::array();
    for (const auto& [col, op] : q.operator_map) map.push_back(Json::array({col, op}));
    j["operator_map"] = std::move(map);
    j["template_text"] = q.template_text;
    j["slot_values"] = q.slot_values;
    j["surface_text"] = q.surface_text;
    j["score"] = q.score;
    j["valid"] = q.valid;
    j["slice"] = slice_to_json(q.slice_ref);
    return j;
}

QuestionCandidate question_from_json(const Json& j) {
    QuestionCandidate q;
    q.id = j.at("id").get<std::string>();
    q.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& kv : j.at("operator_map"))
        q.operator_map.emplace_back(kv.at(0).get<std::string>(), kv.at(1).get<std::string>());
    q.template_text = j.at("template_text").get<std::string>();
    q.slot_values = j.at("slot_values").get<std::vector<std::string>>();
    q.surface_text = j.at("surface_text").get<std::string>();
    q.score = j.at("score").get<double>();
    q.valid = j.at("valid").get<bool>();
    q.slice_ref = slice_from_json(j.at("slice"));
    return q;
}

std::string serialize_session(const SessionState& state, const Dataset& dataset) {
    Json doc;
    doc["format_version"] = kSnapshotFormatVersion;
    doc["session_id"] = state.session_id;
    doc["dataset"] = Json{{"name", dataset.name()}, {"content_hash", dataset.content_hash()}};
    doc["config"] = config_to_json(state.config);
    doc["columns"] = state.columns;
    doc["counters"] = state.counters;
    doc["history"] = state.history;
    doc["iteration"] = state.iteration;
    Json questions = Json::array();
    for (const auto& q : state.question_cache) questions.push_back(question_to_json(q));
    doc["questions"] = std::move(questions);
    return doc.dump(2) + "\n";
}

SessionSnapshot peek_snapshot(std::string_view document) {
    Json doc = parse_document(document);
    check_version(doc);
    try {
        SessionSnapshot snap;
        snap.format_version = doc.at("format_version").get<int>();
        snap.session_id = doc.at("session_id").get<std::string>();
        snap.dataset_name = doc.at("dataset").at("name").get<std::string>();
        snap.dataset_hash = doc.at("dataset").at("content_hash").get<std::string>();
        snap.document = std::string(document);
        return snap;
    } catch (const Json::exception& e) {
        corrupt(std::string("snapshot is missing fields: ") + e.what());
    }
}

SessionState restore_session(std::string_view document, const Dataset& dataset) {
    Json doc = parse_document(document);
    check_version(doc);
    try {
        const auto hash = doc.at("dataset").at("content_hash").get<std::string>();
        if (hash != dataset.content_hash())
            throw Error(ErrorCode::DatasetMismatch, "snapshot was taken on dataset " + hash + ", not " +
                                                        dataset.content_hash());
        SessionState state;
        state.session_id = doc.at("session_id").get<std::string>();
        state.dataset_id = dataset.id();
        state.config = config_from_json(doc.at("config"));
        state.columns = doc.at("columns").get<std::vector<std::string>>();
        state.counters = doc.at("counters").get<std::vector<std::uint64_t>>();
        state.history = doc.at("history").get<std::vector<std::string>>();
        state.iteration = doc.at("iteration").get<std::size_t>();
        for (const auto& qj : doc.at("questions")) state.question_cache.push_back(question_from_json(qj));
        if (state.counters.size() != state.columns.size()) corrupt("counters and columns differ in length");
        for (auto t : state.counters)
            if (t == 0) corrupt("counters must be at least 1");
        return state;
    } catch (const Json::exception& e) {
        corrupt(std::string("snapshot is missing fields: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument) corrupt(e.what());
        throw;
    }
}

SessionSnapshot save_session(const SessionState& state, const Dataset& dataset,
                             const std::filesystem::path& destination) {
    SessionSnapshot snap;
    snap.session_id = state.session_id;
    snap.dataset_name = dataset.name();
    snap.dataset_hash = dataset.content_hash();
    snap.document = serialize_session(state, dataset);

    auto tmp = destination;
    tmp += ".tmp-" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + tmp.string() + "'");
        out << snap.document;
        out.flush();
        if (!out) throw Error(ErrorCode::IoFailure, "write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, destination, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoFailure, "cannot move snapshot into '" + destination.string() + "'");
    }
    return snap;
}

SessionState load_session(const std::filesystem::path& source, const Dataset& dataset) {
    std::ifstream in(source, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + source.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return restore_session(buf.str(), dataset);
}

}  // namespace qgen
