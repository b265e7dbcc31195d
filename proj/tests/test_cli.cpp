#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "swapnet/impl_model.hpp"
#include "swapnet/trace_format.hpp"
#include "testutil.hpp"

using namespace swapnet;
using namespace swapnet::testutil;

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

CommandResult run_cli(const std::string& args, const std::string& env = "") {
    std::string cmd = (env.empty() ? "" : env + " ") + std::string(SWAPNET_BIN) + " " + args +
                      " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CommandResult res;
    char buf[512];
    while (fgets(buf, sizeof buf, pipe)) res.output += buf;
    int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string temp_path(const std::string& stem) {
    return "/tmp/swapnet_cli_" + std::to_string(getpid()) + "_" + stem;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST_CASE("trace files round-trip through render and parse") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        NetworkTrace tr;
        std::size_t n = rng() % 20;
        for (std::size_t k = 0; k < n; ++k) {
            ConnectionId c = static_cast<ConnectionId>(rng() % 100);
            Byte b = static_cast<Byte>(rng() % 256);
            switch (rng() % 3) {
                case 0: tr.push_back(new_connection(c)); break;
                case 1: tr.push_back(to_server(c, b)); break;
                default: tr.push_back(from_server(c, b)); break;
            }
        }
        auto parsed = parse_trace_text(render_trace_file(tr));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == tr);
    }
}

TEST_CASE("oracle scripts round-trip and drive the model") {
    std::vector<Value> script = {
        int_value(1),                                                     // accept id 1
        int_value(1), int_value(0), bytes_value(bytes_of_string("abc")),  // service: recv
        int_value(1), int_value(0), int_value(3),                         // service: send
        Value{NoConn{}}, Value{Failure{}}, unit_value(), bytes_value({}),
    };
    std::string rendered = render_oracle_script(script);
    auto parsed = parse_oracle_script(rendered);
    REQUIRE(parsed.has_value());
    CHECK(*parsed == script);

    // A parsed script drives the model like the in-memory one.
    std::vector<Value> drive(parsed->begin(), parsed->begin() + 7);
    SwapContext ctx = make_swap_context(small_config());
    ModelRun run = run_model_script(ctx, drive);
    CHECK(run.final_state.last_full_msg == bytes_of_string("abc"));

    TraceParseError err;
    CHECK(!parse_oracle_script("i\n", &err).has_value());
    CHECK(!parse_oracle_script("b 6\n", &err).has_value());
    CHECK(!parse_oracle_script("z 3\n", &err).has_value());
    CHECK(!parse_oracle_script("u 1\n", &err).has_value());
}

TEST_CASE("parser accepts comments and blank lines, reports bad input") {
    auto ok = parse_trace_text("# header\n\nC 1   # open\nS 1 6a\nF 1 00\n");
    REQUIRE(ok.has_value());
    CHECK(ok->size() == 3);
    CHECK((*ok)[1].byte == 0x6a);

    TraceParseError err;
    CHECK(!parse_trace_text("C 1\nX 2\n", &err).has_value());
    CHECK(err.line == 2);
    CHECK(!parse_trace_text("S 1\n", &err).has_value());
    CHECK(!parse_trace_text("S 1 6a 99\n", &err).has_value());
    CHECK(!parse_trace_text("S 1 6g\n", &err).has_value());
    CHECK(!parse_trace_text("C -4\n", &err).has_value());
}

TEST_CASE("check: the disordered observation is accepted with the linear witness") {
    std::string path = temp_path("disordered.trace");
    write_file(path, render_trace_file(disordered_three_client_observation()));
    CommandResult res = run_cli("check " + path);
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("accepted") != std::string::npos);
    // The printed witness is exactly the flattened linear run.
    std::string witness = render_trace_file(linear_three_client_run());
    CHECK(res.output.find(witness) != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("check: empty file is accepted") {
    std::string path = temp_path("empty.trace");
    write_file(path, "");
    CHECK(run_cli("check " + path).exit_code == 0);
    std::remove(path.c_str());
}

TEST_CASE("check: a corrupted line is a parse error (exit 2)") {
    std::string path = temp_path("corrupt.trace");
    write_file(path, "C 1\nBOGUS LINE\n");
    CommandResult res = run_cli("check " + path);
    CHECK(res.exit_code == 2);
    std::remove(path.c_str());
}

TEST_CASE("check: an unexplainable trace is a counterexample (exit 1)") {
    std::string path = temp_path("bad.trace");
    NetworkTrace bad = {new_connection(1), to_server(1, 'a'), to_server(1, 'b'),
                        to_server(1, 'c'), from_server(1, 'z')};
    write_file(path, render_trace_file(bad));
    CommandResult res = run_cli("check " + path);
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("rejected") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("serve: unknown mutant id exits nonzero with the registry listed") {
    CommandResult res = run_cli("serve --mutant 99");
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("unknown mutant") != std::string::npos);
}

TEST_CASE("SWAP_-prefixed environment variables stand in for flags") {
    CommandResult res = run_cli("serve", "SWAP_MUTANT=99");
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("unknown mutant") != std::string::npos);
}

TEST_CASE("model-refine: depth 0 holds, echo mutant yields a counterexample") {
    CHECK(run_cli("model-refine --depth 0").exit_code == 0);
    CommandResult echo = run_cli("model-refine --depth 5 --mutant echo");
    CHECK(echo.exit_code == 1);
    CHECK(echo.output.find("counterexample") != std::string::npos);
    CHECK(run_cli("model-refine --depth 4 --mutant bogus").exit_code == 2);
}

TEST_CASE("model-refine: tiny budget reports exit 3") {
    CommandResult res = run_cli("model-refine --depth 8 --budget 10");
    CHECK(res.exit_code == 3);
    CHECK(res.output.find("budget") != std::string::npos);
}

TEST_CASE("test: single-seed range runs exactly one scenario") {
    CommandResult res = run_cli("test --target model --seeds 7..7");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("scenarios=1") != std::string::npos);
}

TEST_CASE("test: model echo mutant exits 1 and writes the shrunk trace") {
    std::string path = temp_path("cex.trace");
    CommandResult res =
        run_cli("test --target model --mutant 3 --seeds 1..20 --trace-out " + path);
    CHECK(res.exit_code == 1);
    std::ifstream in(path);
    REQUIRE(in.good());
    auto trace = parse_trace_file(in);
    REQUIRE(trace.has_value());
    CHECK(!trace->empty());
    // The written trace is itself rejected by check.
    CHECK(run_cli("check " + path).exit_code == 1);
    std::remove(path.c_str());
}

TEST_CASE("test: bad seed range is a usage error") {
    CHECK(run_cli("test --seeds nonsense").exit_code == 2);
    CHECK(run_cli("test --seeds 5..2").exit_code == 2);
}

TEST_CASE("test: spawned unmutated server passes a few seeds") {
    CommandResult res = run_cli("test --seeds 1..5");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("rejected=0") != std::string::npos);
}
