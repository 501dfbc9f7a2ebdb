#include "test_util.hpp"
#include "qgen/session.hpp"

using namespace qgen;

namespace {

SessionState employee_session(const Dataset& ds) {
    auto r = run_pipeline(ds, EngineConfig{});
    std::vector<std::string> cols;
    for (auto i : r.selected) cols.push_back(ds.column(i).name);
    return SessionState::create("s-1", ds.id(), cols, r.questions, EngineConfig{});
}

std::vector<std::string> ranked_ids(const SessionState& s) {
    std::vector<std::string> out;
    for (auto i : current_ranking(s)) out.push_back(s.question_cache[i].id);
    return out;
}

}  // namespace

TEST_CASE("save and load preserve the ranking") {
    auto ds = testing::employees();
    auto s = employee_session(ds);
    record_selection(s, s.question_cache[3].id);
    record_column_interest(s, "Age");

    testing::TempDir dir("session");
    auto path = dir / "a.qsession";
    auto snap = save_session(s, ds, path);
    CHECK(snap.format_version == 1);
    CHECK(snap.dataset_hash == ds.content_hash());
    CHECK(testing::read_file(path) == snap.document);
    CHECK(snap.document.find("{\n  \"format_version\": 1,") == 0);

    auto back = load_session(path, ds);
    CHECK(back.counters == s.counters);
    CHECK(back.history == s.history);
    CHECK(back.iteration == s.iteration);
    CHECK(back.columns == s.columns);
    CHECK(ranked_ids(back) == ranked_ids(s));
    CHECK(serialize_session(back, ds) == snap.document);

    for (std::size_t i = 0; i < s.question_cache.size(); ++i) {
        const auto& a = s.question_cache[i];
        const auto& b = back.question_cache[i];
        CHECK(a.surface_text == b.surface_text);
        CHECK(a.score == b.score);
        CHECK(a.slice_ref.member_rows == b.slice_ref.member_rows);
        CHECK(a.slice_ref.significance.p_value == b.slice_ref.significance.p_value);
    }
}

TEST_CASE("snapshot errors") {
    auto ds = testing::employees();
    auto s = employee_session(ds);
    auto doc = serialize_session(s, ds);

    auto other = load_dataset("a,b\n1,x\n2,y\n3,x\n");
    CHECK_ERROR_CODE(restore_session(doc, other), DatasetMismatch);

    auto v2 = doc;
    v2.replace(v2.find("\"format_version\": 1"), 19, "\"format_version\": 2");
    CHECK_ERROR_CODE(restore_session(v2, ds), VersionMismatch);

    CHECK_ERROR_CODE(restore_session("{not json", ds), CorruptSnapshot);
    CHECK_ERROR_CODE(restore_session("{}", ds), CorruptSnapshot);
    CHECK_ERROR_CODE(restore_session(doc.substr(0, doc.size() / 2), ds), CorruptSnapshot);

    auto no_counters = Json::parse(doc);
    no_counters.erase("counters");
    CHECK_ERROR_CODE(restore_session(no_counters.dump(), ds), CorruptSnapshot);

    auto zero = Json::parse(doc);
    zero["counters"][0] = 0;
    CHECK_ERROR_CODE(restore_session(zero.dump(), ds), CorruptSnapshot);

    CHECK_ERROR_CODE(load_session(testing::data_dir() / "absent.qsession", ds), IoFailure);
}

TEST_CASE("save leaves no temporary files") {
    auto ds = testing::employees();
    auto s = employee_session(ds);
    testing::TempDir dir("atomic");
    save_session(s, ds, dir / "x.qsession");
    save_session(s, ds, dir / "x.qsession");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
    CHECK(files == 1);
}

TEST_CASE("peek reads the binding") {
    auto ds = testing::employees();
    auto doc = serialize_session(employee_session(ds), ds);
    auto snap = peek_snapshot(doc);
    CHECK(snap.session_id == "s-1");
    CHECK(snap.dataset_name == "employees");
    CHECK(snap.dataset_hash == ds.content_hash());
}

TEST_CASE("engine config overrides") {
    EngineConfig base;
    auto c = config_from_json(Json{{"r_max", 2}, {"alpha", 0.1}, {"entity", "people"}, {"measures", "cv,std"}}, base);
    CHECK(c.slicer.r_max == 2);
    CHECK(c.slicer.alpha == 0.1);
    CHECK(c.entity == "people");
    CHECK(c.measures.to_string() == "cv,std");
    CHECK(c.question_limit == 500);
    CHECK_ERROR_CODE(config_from_json(Json{{"bogus", 1}}, base), InvalidArgument);
    CHECK_ERROR_CODE(config_from_json(Json{{"alpha", "high"}}, base), InvalidArgument);
    CHECK_ERROR_CODE(config_from_json(Json{{"alpha", 0}}, base), InvalidArgument);
    CHECK_ERROR_CODE(config_from_json(Json{{"top_k_percent_values", {0}}}, base), InvalidArgument);
    auto round = config_from_json(config_to_json(c), EngineConfig{});
    CHECK(config_to_json(round) == config_to_json(c));
}

TEST_CASE("slice json round trip covers every operand kind") {
    Slice s;
    s.subset_columns = {"a", "b", "c", "d"};
    s.subset_indices = {0, 1, 2, 3};
    s.fixed_column = "d";
    s.fixed_index = 3;
    s.measure = {MeasureOp::TopKPercent, 25};
    s.predicates = {SlicePredicate{"a", 0, FilterOp::Above, 1.5}, SlicePredicate{"b", 1, FilterOp::Among, std::string("x")},
                    SlicePredicate{"c", 2, FilterOp::Before, DateValue{18000}}};
    s.member_rows = {1, 4};
    s.significance = {"effect-only", 0.1, 1.0, 0.1, false};
    s.interestingness = 0.05;
    auto back = slice_from_json(slice_to_json(s));
    CHECK(slice_to_json(back) == slice_to_json(s));
    CHECK(back.predicates[2].operand == s.predicates[2].operand);
    s.predicates[0] = SlicePredicate{"a", 0, FilterOp::Within, Interval{1, 2}};
    CHECK(slice_from_json(slice_to_json(s)).predicates[0].operand == s.predicates[0].operand);
}
