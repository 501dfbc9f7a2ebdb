#include <chrono>
#include <csignal>
#include <spawn.h>
#include <sstream>
#include <sys/wait.h>
#include <thread>

#include "httplib.h"
#include "test_util.hpp"
#include "qgen/cli.hpp"
#include "qgen/session.hpp"

extern char** environ;

using namespace qgen;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "qgen");
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string employees_path() { return (testing::data_dir() / "employees.csv").string(); }

pid_t spawn(const std::vector<std::string>& args, const std::string& stdout_path) {
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 1, stdout_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    pid_t pid = 0;
    posix_spawn(&pid, args[0].c_str(), &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    return pid;
}

int wait_exit(pid_t pid) {
    int status = 0;
    waitpid(pid, &status, 0);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int wait_for_port(const std::filesystem::path& log) {
    for (int i = 0; i < 200; ++i) {
        auto text = testing::read_file(log);
        auto pos = text.find("listening on ");
        if (pos != std::string::npos && text.find('\n', pos) != std::string::npos) {
            auto colon = text.rfind(':', text.find('\n', pos));
            return std::stoi(text.substr(colon + 1));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(25));
    }
    return -1;
}

}  // namespace

TEST_CASE("generate writes ranked questions") {
    auto r = run({"generate", "--input", employees_path()});
    REQUIRE(r.code == 0);
    auto doc = Json::parse(r.out);
    CHECK(doc["questions"].size() == doc["question_count"]);
    bool found = false;
    for (const auto& q : doc["questions"]) {
        auto t = q["text"].get<std::string>();
        found = found || (t.find("average salary") != std::string::npos && t.find("New York") != std::string::npos);
        CHECK(q.contains("rank"));
        CHECK(q.contains("score"));
        CHECK(q.contains("operators"));
        CHECK(q.contains("slot_values"));
        CHECK(q.contains("columns"));
    }
    CHECK(found);
}

TEST_CASE("generate options") {
    auto one = run({"generate", "--input", employees_path(), "--limit", "1"});
    REQUIRE(one.code == 0);
    CHECK(Json::parse(one.out)["questions"].size() == 1);

    auto narrow = run({"generate", "--input", employees_path(), "--max-cols", "1", "--entity", "employees"});
    for (const auto& q : Json::parse(narrow.out)["questions"]) CHECK(q["columns"].size() == 1);
    CHECK(narrow.out.find("employees") != std::string::npos);

    auto k1 = run({"--top-k-columns", "1", "generate", "--input", employees_path()});
    REQUIRE(k1.code == 0);
    CHECK(Json::parse(k1.out)["columns"] == Json::array({"City"}));
}

TEST_CASE("generate is byte-deterministic") {
    testing::TempDir dir("gen");
    auto a = (dir / "a.json").string(), b = (dir / "b.json").string();
    REQUIRE(run({"generate", "--input", employees_path(), "--output", a}).code == 0);
    REQUIRE(run({"generate", "--input", employees_path(), "--output", b}).code == 0);
    CHECK(testing::read_file(a) == testing::read_file(b));
    CHECK_FALSE(testing::read_file(a).empty());
}

TEST_CASE("exit codes") {
    CHECK(run({"generate"}).code == 2);
    CHECK(run({"generate", "--input", "/nonexistent.csv"}).code == 2);
    CHECK(run({"generate", "--input", employees_path(), "--limit", "0"}).code == 2);
    CHECK(run({"generate", "--input", employees_path(), "--alpha", "abc"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"--help"}).code == 0);

    testing::TempDir dir("codes");
    testing::write_file(dir / "empty.csv", "");
    auto empty = run({"generate", "--input", (dir / "empty.csv").string()});
    CHECK(empty.code == 2);
    CHECK(empty.err.find("EmptyInput") != std::string::npos);

    testing::write_file(dir / "ids.csv", "id\nA\nB\n");
    CHECK(run({"generate", "--input", (dir / "ids.csv").string()}).code == 3);
}

TEST_CASE("replay traces each selection") {
    testing::TempDir dir("replay");
    auto gen = Json::parse(run({"generate", "--input", employees_path()}).out);
    std::string pair_id, single_id;
    for (const auto& q : gen["questions"]) {
        if (pair_id.empty() && q["columns"] == Json::array({"City", "Age"})) pair_id = q["id"];
        if (single_id.empty() && q["columns"] == Json::array({"Salary"})) single_id = q["id"];
    }
    REQUIRE_FALSE(pair_id.empty());
    testing::write_file(dir / "sel.txt", "# picks\n" + pair_id + "\n\n" + single_id + "\ncolumn:Age\n");
    auto args = std::vector<std::string>{"replay", "--input", employees_path(), "--selections", (dir / "sel.txt").string(),
                                         "--top", "5"};
    auto a = run(args);
    REQUIRE(a.code == 0);
    auto b = run(args);
    CHECK(a.out == b.out);
    auto trace = Json::parse(a.out)["trace"];
    REQUIRE(trace.size() == 4);
    CHECK(trace[0]["applied"].is_null());
    CHECK(trace[1]["applied"] == pair_id);
    CHECK(trace[1]["counters"][0]["probability"] == 0.4);
    CHECK(trace[1]["counters"][2]["probability"] == 0.2);
    CHECK(trace[3]["counters"][1]["counter"] == 3);
    CHECK(trace[1]["questions"].size() == 5);

    testing::write_file(dir / "empty.txt", "");
    auto none = run({"replay", "--input", employees_path(), "--selections", (dir / "empty.txt").string()});
    CHECK(Json::parse(none.out)["trace"].size() == 1);

    testing::write_file(dir / "bad.txt", "deadbeef\n");
    auto bad = run({"replay", "--input", employees_path(), "--selections", (dir / "bad.txt").string()});
    CHECK(bad.code == 3);
    CHECK(bad.err.find("UnknownQuestion") != std::string::npos);
}

TEST_CASE("config file via QGEN_CONFIG, flags win") {
    testing::TempDir dir("config");
    testing::write_file(dir / "qgen.toml", "limit = 3\nentity = \"staff\"\n");
    setenv("QGEN_CONFIG", (dir / "qgen.toml").string().c_str(), 1);
    auto a = run({"generate", "--input", employees_path()});
    auto b = run({"generate", "--input", employees_path(), "--limit", "2"});
    auto wide = run({"generate", "--input", employees_path(), "--limit", "200"});
    unsetenv("QGEN_CONFIG");
    REQUIRE(a.code == 0);
    CHECK(Json::parse(a.out)["questions"].size() == 3);
    CHECK(wide.out.find("staff") != std::string::npos);
    CHECK(Json::parse(b.out)["questions"].size() == 2);

    setenv("QGEN_CONFIG", (dir / "absent.toml").string().c_str(), 1);
    CHECK(run({"generate", "--input", employees_path()}).code == 2);
    unsetenv("QGEN_CONFIG");
}

TEST_CASE("serve answers health, refuses a taken port and stops on SIGINT") {
    testing::TempDir dir("serve");
    auto log = dir / "serve.log";
    pid_t pid = spawn({QGEN_BINARY, "serve", "--port", "0"}, log.string());
    REQUIRE(pid > 0);
    int port = wait_for_port(log);
    REQUIRE(port > 0);

    httplib::Client c("127.0.0.1", port);
    auto r = c.Get("/health");
    REQUIRE(r);
    CHECK(r->status == 200);

    pid_t second = spawn({QGEN_BINARY, "serve", "--port", std::to_string(port)}, (dir / "second.log").string());
    CHECK(wait_exit(second) == 4);

    kill(pid, SIGINT);
    CHECK(wait_exit(pid) == 0);
    CHECK(testing::read_file(log).find("stopped") != std::string::npos);
}

TEST_CASE("serve rejects a missing catalog directory") {
    CHECK(run({"serve", "--port", "0", "--catalog-dir", "/nonexistent/dir"}).code == 2);
}
