// swapnet: a swap server, a reference model of it, and a property-based
// tester that checks observed network traces against the linear
// specification modulo network reordering.

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "swapnet/refinement.hpp"
#include "swapnet/server.hpp"
#include "swapnet/tester.hpp"
#include "swapnet/trace_format.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCounterexample = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBudget = 3;

std::string self_binary() {
    char buf[4096];
    ssize_t n = readlink("/proc/self/exe", buf, sizeof buf - 1);
    if (n <= 0) return "swapnet";
    buf[n] = '\0';
    return std::string(buf);
}

bool parse_seed_range(const std::string& text, std::uint64_t& first, std::uint64_t& count) {
    auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            first = std::stoull(text);
            count = 1;
            return true;
        }
        first = std::stoull(text.substr(0, dots));
        std::uint64_t last = std::stoull(text.substr(dots + 2));
        if (last < first) return false;
        count = last - first + 1;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

int cmd_serve(const swapnet::ServerConfig& cfg) {
    if (cfg.mutant != 0 && !swapnet::is_known_mutant(cfg.mutant)) {
        std::cerr << "unknown mutant id " << cfg.mutant << "; known mutants:\n";
        for (const auto& m : swapnet::mutant_registry()) {
            std::cerr << "  " << m.id << ": " << m.description << "\n";
        }
        return kExitUsage;
    }
    try {
        swapnet::ServerConfig run = cfg;
        run.on_listening = [](std::uint16_t port) {
            std::printf("listening port=%u\n", port);
            std::fflush(stdout);
        };
        swapnet::serve(run);
    } catch (const std::exception& e) {
        std::cerr << "serve: " << e.what() << "\n";
        return 1;
    }
    return kExitPass;
}

int cmd_check(const std::string& path, std::size_t message_size) {
    swapnet::TraceParseError err;
    std::optional<swapnet::NetworkTrace> trace;
    if (path == "-") {
        trace = swapnet::parse_trace_file(std::cin, &err);
    } else {
        std::ifstream in(path);
        if (!in) {
            std::cerr << "check: cannot open " << path << "\n";
            return kExitUsage;
        }
        trace = swapnet::parse_trace_file(in, &err);
    }
    if (!trace) {
        std::cerr << "check: " << path << ":" << err.line << ": " << err.message << "\n";
        return kExitUsage;
    }
    swapnet::EnumConfig cfg;
    cfg.message_size = message_size;
    swapnet::SwapContext ctx = swapnet::make_swap_context(cfg);
    swapnet::Verdict v = swapnet::spec_behavior_member(ctx, *trace);
    switch (v.kind) {
        case swapnet::Verdict::Kind::Accepted:
            std::cout << "accepted: trace of " << trace->size()
                      << " events explained by witness:\n"
                      << swapnet::render_trace_file(v.witness);
            return kExitPass;
        case swapnet::Verdict::Kind::Rejected:
            std::cout << "rejected: no spec explanation for observed trace:\n"
                      << swapnet::render_trace_file(v.counterexample);
            return kExitCounterexample;
        case swapnet::Verdict::Kind::BudgetExceeded:
            std::cout << "inconclusive: search budget exceeded\n";
            return kExitBudget;
    }
    return kExitBudget;
}

int run_single_against_addr(const std::string& addr, std::uint64_t seed,
                            const swapnet::ScenarioLimits& limits, std::size_t message_size) {
    auto colon = addr.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "test: --addr expects host:port\n";
        return kExitUsage;
    }
    std::string host = addr.substr(0, colon);
    int port = std::stoi(addr.substr(colon + 1));
    swapnet::ScenarioLimits use = limits;
    use.message_size = message_size;
    swapnet::Scenario sc = swapnet::gen_scenario(seed, use);
    swapnet::RunOutcome out =
        swapnet::run_scenario_tcp(sc, host, static_cast<std::uint16_t>(port), use);
    if (out.connect_failed) {
        std::cerr << "test: cannot connect to " << addr << "\n";
        return kExitUsage;
    }
    swapnet::EnumConfig cfg;
    cfg.message_size = message_size;
    swapnet::SwapContext ctx = swapnet::make_swap_context(cfg);
    swapnet::Verdict v = swapnet::spec_behavior_member(ctx, out.trace);
    if (v.accepted()) {
        std::cout << "seed " << seed << ": accepted (" << out.trace.size() << " events)\n";
        return kExitPass;
    }
    if (v.rejected()) {
        std::cout << "seed " << seed << ": rejected; observed trace:\n"
                  << swapnet::render_trace_file(out.trace);
        return kExitCounterexample;
    }
    std::cout << "seed " << seed << ": inconclusive (budget exceeded)\n";
    return kExitBudget;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"swap server, implementation model, and network-refinement tester"};
    app.require_subcommand(1);

    // serve
    swapnet::ServerConfig server_cfg;
    int serve_port = 8421;
    auto* serve_cmd = app.add_subcommand("serve", "run the TCP swap server");
    serve_cmd->add_option("--port", serve_port, "listen port (0 = ephemeral)")
        ->envname("SWAP_PORT");
    serve_cmd->add_option("--message-size", server_cfg.message_size, "bytes per message")
        ->envname("SWAP_MESSAGE_SIZE");
    serve_cmd->add_option("--max-conns", server_cfg.max_connections, "max live connections")
        ->envname("SWAP_MAX_CONNS");
    serve_cmd->add_option("--mutant", server_cfg.mutant, "inject a registered bug")
        ->envname("SWAP_MUTANT");
    serve_cmd->add_option("--log-effects", server_cfg.log_effects_path,
                          "append accept/recv/send events to this file")
        ->envname("SWAP_LOG_EFFECTS");
    serve_cmd->add_option("--poll-timeout-ms", server_cfg.poll_timeout_ms,
                          "readiness poll timeout")
        ->envname("SWAP_POLL_TIMEOUT_MS");

    // test
    std::string test_target = "tcp";
    std::string test_server_bin = self_binary();
    std::string test_addr;
    std::string test_seeds = "1..100";
    std::string test_json_path;
    std::string test_trace_out = "counterexample.trace";
    int test_mutant = 0;
    std::size_t test_message_size = 3;
    double test_budget_s = 300.0;
    bool test_no_shrink = false;
    auto* test_cmd = app.add_subcommand("test", "random scenarios against a server or the model");
    test_cmd->add_option("--target", test_target, "tcp or model")->envname("SWAP_TARGET");
    test_cmd->add_option("--server-bin", test_server_bin,
                         "server binary to spawn per scenario (tcp target)");
    test_cmd->add_option("--addr", test_addr,
                         "test an externally managed server at host:port (single scenario; "
                         "the spec assumes a fresh server)");
    test_cmd->add_option("--seeds", test_seeds, "seed range a..b")->envname("SWAP_SEEDS");
    test_cmd->add_option("--mutant", test_mutant, "mutant id for the spawned server/model");
    test_cmd->add_option("--message-size", test_message_size, "bytes per message")
        ->envname("SWAP_MESSAGE_SIZE");
    test_cmd->add_option("--json", test_json_path, "write a JSON report here");
    test_cmd->add_option("--trace-out", test_trace_out,
                         "write the shrunk counterexample trace here");
    test_cmd->add_option("--budget-s", test_budget_s, "time budget in seconds");
    test_cmd->add_flag("--no-shrink", test_no_shrink, "report unshrunk counterexamples");

    // check
    std::string check_path;
    std::size_t check_message_size = 3;
    auto* check_cmd = app.add_subcommand("check", "explain a recorded trace file");
    check_cmd->add_option("file", check_path, "trace file ('-' for stdin)")->required();
    check_cmd->add_option("--message-size", check_message_size, "bytes per message")
        ->envname("SWAP_MESSAGE_SIZE");

    // model-refine
    swapnet::RefineConfig refine_cfg;
    std::size_t refine_alphabet = 2;
    std::size_t refine_conns = 2;
    std::string refine_mutant = "none";
    auto* refine_cmd =
        app.add_subcommand("model-refine", "bounded network refinement of the model");
    refine_cmd->add_option("--depth", refine_cfg.depth, "max observed events");
    refine_cmd->add_option("--alphabet-size", refine_alphabet, "client byte alphabet size");
    refine_cmd->add_option("--conn-ids", refine_conns, "connection id pool size");
    refine_cmd->add_option("--message-size", refine_cfg.enumeration.message_size,
                           "bytes per message");
    refine_cmd->add_option("--mutant", refine_mutant, "none, echo, or nostore");
    refine_cmd->add_option("--budget", refine_cfg.node_budget, "search node budget");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    if (serve_cmd->parsed()) {
        if (serve_port < 0 || serve_port > 65535) {
            std::cerr << "serve: invalid port\n";
            return kExitUsage;
        }
        server_cfg.port = static_cast<std::uint16_t>(serve_port);
        return cmd_serve(server_cfg);
    }

    if (check_cmd->parsed()) {
        return cmd_check(check_path, check_message_size);
    }

    if (refine_cmd->parsed()) {
        refine_cfg.enumeration.alphabet.clear();
        for (std::size_t i = 0; i < refine_alphabet; ++i) {
            refine_cfg.enumeration.alphabet.push_back(static_cast<swapnet::Byte>('a' + i));
        }
        refine_cfg.enumeration.conn_ids.clear();
        for (std::size_t i = 0; i < refine_conns; ++i) {
            refine_cfg.enumeration.conn_ids.push_back(static_cast<swapnet::ConnectionId>(i) + 1);
        }
        if (refine_mutant == "echo") {
            refine_cfg.mutant = swapnet::ModelMutant::EchoReply;
        } else if (refine_mutant == "nostore") {
            refine_cfg.mutant = swapnet::ModelMutant::NoStore;
        } else if (refine_mutant != "none") {
            std::cerr << "model-refine: unknown mutant '" << refine_mutant << "'\n";
            return kExitUsage;
        }
        swapnet::RefineResult r = swapnet::network_refines_bounded(refine_cfg);
        switch (r.kind) {
            case swapnet::RefineResult::Kind::Holds:
                std::cout << "holds: depth " << refine_cfg.depth << ", " << r.nodes_visited
                          << " states\n";
                return kExitPass;
            case swapnet::RefineResult::Kind::Counterexample:
                std::cout << "counterexample (observed trace the spec cannot explain):\n"
                          << swapnet::render_trace_file(r.counterexample);
                return kExitCounterexample;
            case swapnet::RefineResult::Kind::BudgetExceeded:
                std::cout << "inconclusive: node budget exceeded\n";
                return kExitBudget;
        }
        return kExitBudget;
    }

    // test
    std::uint64_t first_seed = 1;
    std::uint64_t seed_count = 100;
    if (!parse_seed_range(test_seeds, first_seed, seed_count)) {
        std::cerr << "test: bad --seeds range '" << test_seeds << "'\n";
        return kExitUsage;
    }
    swapnet::CampaignOptions opts;
    opts.base_seed = first_seed;
    opts.time_budget_s = test_budget_s;
    opts.shrink_counterexamples = !test_no_shrink;
    opts.limits.message_size = test_message_size;

    if (!test_addr.empty()) {
        return run_single_against_addr(test_addr, first_seed, opts.limits, test_message_size);
    }

    swapnet::CampaignTarget target;
    target.message_size = test_message_size;
    if (test_target == "model") {
        target.kind = swapnet::CampaignTarget::Kind::Model;
    } else if (test_target == "tcp") {
        target.kind = swapnet::CampaignTarget::Kind::Tcp;
        target.server_binary = test_server_bin;
    } else {
        std::cerr << "test: unknown target '" << test_target << "'\n";
        return kExitUsage;
    }

    try {
        swapnet::TestReport report = swapnet::run_seed_sweep(
            target, test_mutant, first_seed, static_cast<std::size_t>(seed_count), opts);
        if (!test_json_path.empty()) {
            std::ofstream out(test_json_path);
            out << swapnet::report_to_json(report) << "\n";
        }
        std::cout << "scenarios=" << report.scenarios_run << " accepted=" << report.accepted
                  << " rejected=" << report.rejected << " inconclusive=" << report.inconclusive
                  << " discarded=" << report.discards << "\n";
        if (report.counterexample.has_value()) {
            std::cout << "counterexample seed " << report.counterexample->killing_seed
                      << "; shrunk observed trace written to " << test_trace_out << "\n";
            std::ofstream out(test_trace_out);
            out << swapnet::render_trace_file(report.counterexample->counterexample);
            return kExitCounterexample;
        }
        return kExitPass;
    } catch (const std::exception& e) {
        std::cerr << "test: " << e.what() << "\n";
        return kExitUsage;
    }
}
