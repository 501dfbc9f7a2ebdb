#include <thread>

#include "httplib.h"
#include "test_util.hpp"
#include "qgen/service.hpp"

using namespace qgen;

namespace {

class Running {
public:
    explicit Running(ServiceOptions options) : service_(std::move(options)) {
        port_ = service_.bind();
        thread_ = std::thread([this] { service_.run(); });
    }
    ~Running() {
        service_.stop();
        thread_.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(30, 0);
        return c;
    }
    int port() const { return port_; }

private:
    Service service_;
    int port_ = 0;
    std::thread thread_;
};

ServiceOptions ephemeral() {
    ServiceOptions o;
    o.port = 0;
    return o;
}

Json body(const httplib::Result& r) {
    REQUIRE(r);
    return Json::parse(r->body);
}

std::string employees_csv() { return testing::read_file(testing::data_dir() / "employees.csv"); }

std::string upload(httplib::Client& c) {
    auto r = c.Post("/datasets", employees_csv(), "text/csv");
    REQUIRE(r);
    REQUIRE(r->status == 201);
    return body(r)["dataset_id"].get<std::string>();
}

std::string create(httplib::Client& c, const std::string& dataset_id, int limit = 500) {
    auto r = c.Post("/sessions", Json{{"dataset_id", dataset_id}, {"question_limit", limit}}.dump(), "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 201);
    return body(r)["session_id"].get<std::string>();
}

}  // namespace

TEST_CASE("health and CORS") {
    Running svc(ephemeral());
    auto c = svc.client();
    auto r = c.Get("/health");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body(r)["status"] == "ok");
    CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
    CHECK(r->get_header_value("Content-Type") == "application/json");
    auto pre = c.Options("/sessions");
    REQUIRE(pre);
    CHECK(pre->status == 204);
    CHECK(pre->get_header_value("Access-Control-Allow-Headers").find("X-Request-Id") != std::string::npos);
}

TEST_CASE("upload profiles") {
    Running svc(ephemeral());
    auto c = svc.client();
    auto r = c.Post("/datasets?name=employees", employees_csv(), "text/csv");
    REQUIRE(r);
    CHECK(r->status == 201);
    auto j = body(r);
    CHECK(j["dataset_id"] == "ds-1");
    CHECK(j["profile"]["columns"].size() == 4);
    CHECK(j["profile"]["name"] == "employees");
    CHECK(j["profile"]["columns"][3]["kind"] == "Numerical");
    CHECK(j["profile"]["columns"][1]["categories"]["New York"] == 3);

    auto again = c.Post("/datasets", employees_csv(), "text/csv");
    auto j2 = body(again);
    CHECK(j2["dataset_id"] == "ds-2");
    CHECK(j2["profile"]["content_hash"] == j["profile"]["content_hash"]);

    auto empty = c.Post("/datasets", "", "text/csv");
    REQUIRE(empty);
    CHECK(empty->status == 400);
    CHECK(body(empty)["error"] == "EmptyInput");
    auto ragged = c.Post("/datasets", "a,b\n1\n", "text/csv");
    CHECK(ragged->status == 400);
    CHECK(body(ragged)["error"] == "RaggedRows");
}

TEST_CASE("multipart upload") {
    Running svc(ephemeral());
    auto c = svc.client();
    httplib::MultipartFormDataItems items{{"file", employees_csv(), "people.csv", "text/csv"}};
    auto r = c.Post("/datasets", items);
    REQUIRE(r);
    CHECK(r->status == 201);
    CHECK(body(r)["profile"]["name"] == "people");
}

TEST_CASE("catalog lists directory files in name order plus uploads") {
    testing::TempDir dir("catalog");
    ServiceOptions o = ephemeral();
    o.catalog_dir = dir.path();
    Running svc(o);
    auto c = svc.client();
    CHECK(body(c.Get("/catalog")) == Json::array());

    testing::write_file(dir / "b.csv", employees_csv());
    testing::write_file(dir / "a.csv", "x,y\n1,p\n2,q\n3,p\n");
    testing::write_file(dir / "c.csv", "");
    auto list = body(c.Get("/catalog"));
    REQUIRE(list.size() == 3);
    CHECK(list[0]["name"] == "a");
    CHECK(list[0]["row_count"] == 3);
    CHECK(list[1]["name"] == "b");
    CHECK(list[1]["dataset_id"] == "cat-b.csv");
    CHECK(list[2]["warning"].get<std::string>().find("EmptyInput") == 0);
    CHECK(list[2]["dataset_id"].is_null());

    upload(c);
    list = body(c.Get("/catalog"));
    REQUIRE(list.size() == 4);
    CHECK(list[3]["source"] == "upload");

    auto s = c.Post("/sessions", Json{{"dataset_id", "cat-b.csv"}}.dump(), "application/json");
    CHECK(s->status == 201);
    std::filesystem::remove(dir / "b.csv");
    CHECK(body(c.Get("/catalog")).size() == 3);
}

TEST_CASE("session creation") {
    Running svc(ephemeral());
    auto c = svc.client();
    auto ds = upload(c);
    auto r = c.Post("/sessions", Json{{"dataset_id", ds}, {"question_limit", 500}}.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == 201);
    auto j = body(r);
    CHECK(j["session_id"] == "s-1");
    CHECK(j["question_count"].get<int>() >= 1);
    CHECK(j["question_count"].get<int>() <= 500);

    auto zero = c.Post("/sessions", Json{{"dataset_id", ds}, {"question_limit", 0}}.dump(), "application/json");
    CHECK(zero->status == 400);
    auto missing = c.Post("/sessions", Json{{"dataset_id", "ds-99"}}.dump(), "application/json");
    CHECK(missing->status == 404);
    auto bad = c.Post("/sessions", "{", "application/json");
    CHECK(bad->status == 400);
    auto bad_cfg = c.Post("/sessions", Json{{"dataset_id", ds}, {"config", {{"nope", 1}}}}.dump(), "application/json");
    CHECK(bad_cfg->status == 400);
    auto small = c.Post("/sessions", Json{{"dataset_id", ds}, {"config", {{"r_max", 1}}}}.dump(), "application/json");
    CHECK(body(small)["question_count"].get<int>() < j["question_count"].get<int>());

    auto status = body(c.Get("/sessions/s-1/status"));
    CHECK(status["status"] == "ready");
    CHECK(c.Get("/sessions/s-404/status")->status == 404);
}

TEST_CASE("questions, select and search") {
    Running svc(ephemeral());
    auto c = svc.client();
    auto sid = create(c, upload(c));

    auto top3 = body(c.Get("/sessions/" + sid + "/questions?top=3"));
    REQUIRE(top3["questions"].size() == 3);
    CHECK(top3["iteration"] == 0);
    CHECK(top3["questions"][0]["rank"] == 1);
    auto all = body(c.Get("/sessions/" + sid + "/questions?top=1000"));
    for (std::size_t i = 1; i < all["questions"].size(); ++i)
        CHECK(all["questions"][i - 1]["score"].get<double>() >= all["questions"][i]["score"].get<double>());
    CHECK(c.Get("/sessions/" + sid + "/questions?top=x")->status == 400);

    std::string pick;
    for (const auto& q : all["questions"])
        if (q["columns"].size() == 2 && q["columns"][0] == "City" && q["columns"][1] == "Age") {
            pick = q["id"];
            break;
        }
    REQUIRE_FALSE(pick.empty());
    auto sel = c.Post("/sessions/" + sid + "/select?top=5", Json{{"question_id", pick}}.dump(), "application/json");
    REQUIRE(sel);
    CHECK(sel->status == 200);
    auto sj = body(sel);
    CHECK(sj["iteration"] == 1);
    CHECK(sj["counters"][0]["probability"] == 0.4);
    CHECK(sj["counters"][1]["probability"] == 0.4);
    CHECK(sj["counters"][2]["probability"] == 0.2);
    CHECK(sj["questions"].size() == 5);
    CHECK(sj["questions"][0]["weight"] == 0.4);

    auto unknown = c.Post("/sessions/" + sid + "/select", Json{{"question_id", "zzz"}}.dump(), "application/json");
    CHECK(unknown->status == 404);
    CHECK(body(unknown)["error"] == "UnknownQuestion");
    CHECK(c.Post("/sessions/" + sid + "/select", "{}", "application/json")->status == 400);

    auto col = c.Post("/sessions/" + sid + "/columns", Json{{"column", "Salary"}}.dump(), "application/json");
    CHECK(body(col)["counters"][2]["counter"] == 2);
    CHECK(c.Post("/sessions/" + sid + "/columns", Json{{"column", "Bonus"}}.dump(), "application/json")->status == 404);

    auto found = body(c.Get("/sessions/" + sid + "/search?q=average%20salary&limit=4"));
    CHECK(found["matches"].size() <= 4);
    REQUIRE_FALSE(found["matches"].empty());
    for (const auto& m : found["matches"]) CHECK(m["text"].get<std::string>().find("average salary") != std::string::npos);
}

TEST_CASE("request ids make mutations idempotent") {
    Running svc(ephemeral());
    auto c = svc.client();
    httplib::Headers h{{"X-Request-Id", "abc"}};
    auto a = c.Post("/datasets", h, employees_csv(), "text/csv");
    auto b = c.Post("/datasets", h, employees_csv(), "text/csv");
    CHECK(a->body == b->body);
    CHECK(body(b)["dataset_id"] == "ds-1");
    auto sid = create(c, "ds-1");
    auto first = body(c.Get("/sessions/" + sid + "/questions?top=1"))["questions"][0]["id"].get<std::string>();
    httplib::Headers h2{{"X-Request-Id", "sel-1"}};
    auto s1 = c.Post("/sessions/" + sid + "/select", h2, Json{{"question_id", first}}.dump(), "application/json");
    auto s2 = c.Post("/sessions/" + sid + "/select", h2, Json{{"question_id", first}}.dump(), "application/json");
    CHECK(s1->body == s2->body);
    CHECK(body(c.Get("/sessions/" + sid + "/status"))["iteration"] == 1);
}

TEST_CASE("save and resume") {
    testing::TempDir dir("svc-sessions");
    ServiceOptions o = ephemeral();
    o.session_dir = dir.path();
    Running svc(o);
    auto c = svc.client();
    auto sid = create(c, upload(c));
    auto first = body(c.Get("/sessions/" + sid + "/questions?top=20"))["questions"][7]["id"].get<std::string>();
    c.Post("/sessions/" + sid + "/select", Json{{"question_id", first}}.dump(), "application/json");
    auto before = body(c.Get("/sessions/" + sid + "/questions?top=1000"))["questions"];

    auto saved = body(c.Post("/sessions/" + sid + "/save", "", "application/json"));
    CHECK(saved["format_version"] == 1);
    CHECK(std::filesystem::exists(saved["path"].get<std::string>()));

    auto resumed = c.Post("/sessions/resume", Json{{"snapshot", saved["snapshot"]}}.dump(), "application/json");
    REQUIRE(resumed);
    CHECK(resumed->status == 201);
    auto rj = body(resumed);
    CHECK(rj["restored_from"] == sid);
    CHECK(rj["iteration"] == 1);
    auto after = body(c.Get("/sessions/" + rj["session_id"].get<std::string>() + "/questions?top=1000"))["questions"];
    CHECK(after == before);

    auto raw = c.Post("/sessions/resume", saved["snapshot"].dump(), "application/json");
    CHECK(raw->status == 201);

    auto wrong = c.Post("/datasets", "a,b\n1,x\n2,y\n3,x\n", "text/csv");
    auto wrong_id = body(wrong)["dataset_id"].get<std::string>();
    auto mismatch = c.Post("/sessions/resume", Json{{"snapshot", saved["snapshot"]}, {"dataset_id", wrong_id}}.dump(),
                           "application/json");
    CHECK(mismatch->status == 409);
    CHECK(body(mismatch)["error"] == "DatasetMismatch");

    auto snap = saved["snapshot"];
    snap["format_version"] = 7;
    auto version = c.Post("/sessions/resume", Json{{"snapshot", snap}}.dump(), "application/json");
    CHECK(version->status == 409);
    CHECK(body(version)["error"] == "VersionMismatch");
    CHECK(c.Post("/sessions/resume", Json{{"snapshot", "garbage"}}.dump(), "application/json")->status == 400);
}

TEST_CASE("replaying a call sequence reproduces the responses") {
    auto run = [] {
        Running svc(ephemeral());
        auto c = svc.client();
        std::vector<std::string> out;
        auto up = c.Post("/datasets", employees_csv(), "text/csv");
        out.push_back(up->body);
        auto s = c.Post("/sessions", Json{{"dataset_id", "ds-1"}}.dump(), "application/json");
        out.push_back(s->body);
        auto q = c.Get("/sessions/s-1/questions?top=10");
        out.push_back(q->body);
        auto id = Json::parse(q->body)["questions"][4]["id"].get<std::string>();
        out.push_back(c.Post("/sessions/s-1/select", Json{{"question_id", id}}.dump(), "application/json")->body);
        out.push_back(c.Get("/sessions/s-1/search?q=salary")->body);
        return out;
    };
    CHECK(run() == run());
}

TEST_CASE("binding a taken port fails") {
    Running svc(ephemeral());
    ServiceOptions o;
    o.port = svc.port();
    Service second(o);
    CHECK_ERROR_CODE(second.bind(), IoFailure);
}

TEST_CASE("concurrent sessions stay isolated") {
    Running svc(ephemeral());
    auto c = svc.client();
    auto ds = upload(c);
    auto a = create(c, ds);
    auto b = create(c, ds);
    auto qs = body(c.Get("/sessions/" + a + "/questions?top=6"))["questions"];
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            auto local = svc.client();
            for (int i = 0; i < 5; ++i)
                local.Post("/sessions/" + a + "/select", Json{{"question_id", qs[(t + i) % 6]["id"]}}.dump(),
                           "application/json");
        });
    }
    for (auto& t : threads) t.join();
    CHECK(body(c.Get("/sessions/" + a + "/status"))["iteration"] == 20);
    CHECK(body(c.Get("/sessions/" + b + "/status"))["iteration"] == 0);
}
