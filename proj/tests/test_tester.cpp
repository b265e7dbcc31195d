#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "swapnet/server.hpp"
#include "swapnet/tester.hpp"
#include "testutil.hpp"

using namespace swapnet;
using namespace swapnet::testutil;

namespace {

CampaignTarget tcp_target() {
    CampaignTarget t;
    t.kind = CampaignTarget::Kind::Tcp;
    t.server_binary = SWAPNET_BIN;
    t.message_size = 3;
    return t;
}

}  // namespace

TEST_CASE("gen_scenario is deterministic in the seed") {
    for (std::uint64_t seed : {1ULL, 7ULL, 99ULL}) {
        Scenario a = gen_scenario(seed);
        Scenario b = gen_scenario(seed);
        CHECK(a.messages == b.messages);
        CHECK(a.schedule == b.schedule);
    }
    Scenario a = gen_scenario(1);
    Scenario b = gen_scenario(2);
    CHECK((a.messages != b.messages || a.schedule != b.schedule));
}

TEST_CASE("scenario structure: chunks partition messages, schedule is per-connection ordered") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Scenario sc = gen_scenario(seed);
        REQUIRE(sc.messages.size() >= 1);
        REQUIRE(sc.messages.size() <= 5);

        std::vector<std::size_t> opened(sc.messages.size(), 0);
        std::vector<std::size_t> closed(sc.messages.size(), 0);
        std::vector<std::map<std::size_t, std::size_t>> sent(sc.messages.size());
        for (const Step& s : sc.schedule) {
            REQUIRE(s.conn < sc.messages.size());
            switch (s.kind) {
                case Step::Kind::Open:
                    CHECK(closed[s.conn] == 0);
                    ++opened[s.conn];
                    break;
                case Step::Kind::Close:
                    CHECK(opened[s.conn] == 1);
                    ++closed[s.conn];
                    break;
                case Step::Kind::SendChunk: {
                    CHECK(opened[s.conn] == 1);
                    REQUIRE(s.msg < sc.messages[s.conn].size());
                    // Chunks arrive in order and partition the message.
                    CHECK(s.offset == sent[s.conn][s.msg]);
                    sent[s.conn][s.msg] += s.len;
                    CHECK(sent[s.conn][s.msg] <= sc.message_size);
                    break;
                }
                case Step::Kind::RecvChunk:
                    CHECK(opened[s.conn] == 1);
                    break;
            }
        }
        for (std::size_t c = 0; c < sc.messages.size(); ++c) {
            CHECK(opened[c] == 1);
            CHECK(closed[c] == 1);
            CHECK(sc.messages[c].size() >= 1);
            CHECK(sc.messages[c].size() <= 4);
            for (std::size_t m = 0; m < sc.messages[c].size(); ++m) {
                CHECK(sent[c][m] == sc.message_size);  // fully sent
            }
        }
    }
}

TEST_CASE("limits of one connection and one message give the minimal round trip") {
    ScenarioLimits limits;
    limits.max_connections = 1;
    limits.max_messages = 1;
    Scenario sc = gen_scenario(5, limits);
    CHECK(sc.messages.size() == 1);
    CHECK(sc.messages[0].size() == 1);
    CHECK(sc.messages[0][0].size() == 3);
}

TEST_CASE("generated scenarios interleave sends across connections often enough") {
    std::size_t interleaved = 0;
    for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
        if (gen_scenario(seed).has_cross_connection_send_interleaving()) ++interleaved;
    }
    CHECK(interleaved >= 100);  // at least 10% of scenarios
}

TEST_CASE("run_scenario_model against the unmutated model is accepted") {
    SwapContext ctx = make_swap_context(small_config());
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        RunOutcome out = run_scenario_model(gen_scenario(seed), ModelMutant::None, seed);
        CHECK(!out.connect_failed);
        Verdict v = spec_behavior_member(ctx, out.trace);
        CHECK(v.accepted());
    }
}

TEST_CASE("run_scenario_model against the echo mutant is rejected") {
    SwapContext ctx = make_swap_context(small_config());
    bool rejected = false;
    for (std::uint64_t seed = 1; seed <= 10 && !rejected; ++seed) {
        RunOutcome out = run_scenario_model(gen_scenario(seed), ModelMutant::EchoReply, seed);
        rejected = spec_behavior_member(ctx, out.trace).rejected();
    }
    CHECK(rejected);
}

TEST_CASE("a scenario with no sends yields only connection events and is accepted") {
    Scenario sc;
    sc.seed = 0;
    sc.message_size = 3;
    sc.messages = {{}, {}};
    sc.schedule = {Step{Step::Kind::Open, 0, 0, 0, 0, 0, false},
                   Step{Step::Kind::Open, 1, 0, 0, 0, 0, false},
                   Step{Step::Kind::Close, 0, 0, 0, 0, 0, false},
                   Step{Step::Kind::Close, 1, 0, 0, 0, 0, false}};
    RunOutcome out = run_scenario_model(sc, ModelMutant::None, 1);
    REQUIRE(out.trace.size() == 2);
    CHECK(out.trace[0].type == NetEventType::NewConnection);
    CHECK(out.trace[1].type == NetEventType::NewConnection);
    CHECK(!out.no_response());  // nothing was expected
    CHECK(spec_behavior_member(make_swap_context(small_config()), out.trace).accepted());
}

TEST_CASE("shrinking reduces the scenario and preserves failure") {
    SwapContext ctx = make_swap_context(small_config());
    // Deterministic failing predicate: the echo-mutant model rejects.
    auto failing = [&](const Scenario& cand) {
        RunOutcome out = run_scenario_model(cand, ModelMutant::EchoReply, 42);
        return spec_behavior_member(ctx, out.trace).rejected();
    };
    Scenario big;
    std::uint64_t seed = 1;
    for (;; ++seed) {
        big = gen_scenario(seed);
        if (failing(big)) break;
        REQUIRE(seed < 20);
    }
    Scenario small = shrink(big, failing);
    CHECK(failing(small));  // shrinking preserved the failure
    CHECK(small.size_measure() <= big.size_measure());
    // The echo bug needs one connection and one message.
    CHECK(small.messages.size() == 1);
    std::size_t msgs = 0;
    for (const auto& per_conn : small.messages) msgs += per_conn.size();
    CHECK(msgs <= 2);

    // A second shrink is a fixpoint: no candidate reduction still fails.
    Scenario again = shrink(small, failing);
    CHECK(again.size_measure() == small.size_measure());
}

TEST_CASE("TCP: the unmutated server passes seeded scenarios") {
    CampaignOptions opts;
    TestReport report = run_seed_sweep(tcp_target(), 0, 1, 15, opts);
    CHECK(report.scenarios_run == 15);
    CHECK(report.rejected == 0);
    CHECK(report.accepted >= 14);  // allow a rare inconclusive, not a rejection
    CHECK(!report.counterexample.has_value());
}

TEST_CASE("TCP: the echo mutant is killed and the counterexample replays") {
    CampaignOptions opts;
    TestReport report = run_seed_sweep(tcp_target(), 3, 1, 50, opts);
    REQUIRE(report.counterexample.has_value());
    const MutantOutcome& cex = *report.counterexample;
    CHECK(cex.scenarios_to_kill <= 2);
    SwapContext ctx = make_swap_context(small_config());
    CHECK(spec_behavior_member(ctx, cex.counterexample).rejected());

    // Replayability: the shrunk scenario still kills a fresh server.
    ScenarioVerdict replay = run_and_check(tcp_target(), 3, cex.killing_seed, opts.limits);
    CHECK(replay.kind == ScenarioVerdict::Kind::Rejected);
}

TEST_CASE("JSON report carries the documented keys") {
    CampaignOptions opts;
    opts.shrink_counterexamples = false;
    TestReport report = run_seed_sweep(tcp_target(), 0, 1, 3, opts);
    std::string json = report_to_json(report);
    for (const char* key :
         {"scenarios_run", "verdicts", "accepted", "rejected", "inconclusive", "discarded",
          "counterexample", "mutants", "elapsed_s"}) {
        CHECK(json.find(key) != std::string::npos);
    }
}

TEST_CASE("model campaign kills the model-level mutants") {
    CampaignTarget target;
    target.kind = CampaignTarget::Kind::Model;
    target.message_size = 3;
    CampaignOptions opts;
    opts.max_scenarios = 50;
    TestReport report = mutation_campaign(target, opts);
    REQUIRE(report.mutants.size() == 2);  // echo and no-store
    for (const MutantOutcome& m : report.mutants) {
        CHECK(m.killed);
        CHECK(m.scenarios_to_kill <= 10);
    }
}

TEST_CASE("ServerProcess spawns, reports a port, and dies on stop") {
    ServerProcess server(SWAPNET_BIN, 0, 3);
    REQUIRE(server.ok());
    CHECK(server.port() != 0);
    server.stop();
}
