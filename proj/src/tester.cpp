#include "swapnet/tester.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <random>
#include <set>

#include <json.hpp>

#include "swapnet/server.hpp"

namespace swapnet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t rand_in(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    if (hi <= lo) return lo;
    return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

bool coin(std::mt19937_64& rng, double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

}  // namespace

std::size_t Scenario::size_measure() const {
    std::size_t msgs = 0;
    for (const auto& per_conn : messages) msgs += per_conn.size();
    return messages.size() + msgs + schedule.size();
}

bool Scenario::has_cross_connection_send_interleaving() const {
    // Some connection has two send chunks with another connection's send
    // chunk strictly between them.
    std::vector<std::size_t> sends;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (schedule[i].kind == Step::Kind::SendChunk) sends.push_back(i);
    }
    for (std::size_t a = 0; a < sends.size(); ++a) {
        for (std::size_t b = a + 2; b < sends.size(); ++b) {
            if (schedule[sends[a]].conn != schedule[sends[b]].conn) continue;
            for (std::size_t m = a + 1; m < b; ++m) {
                if (schedule[sends[m]].conn != schedule[sends[a]].conn) return true;
            }
        }
    }
    return false;
}

Scenario gen_scenario(std::uint64_t seed, const ScenarioLimits& limits) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    Scenario sc;
    sc.seed = seed;
    sc.message_size = limits.message_size;

    std::size_t lo = std::min<std::size_t>(2, limits.max_connections);
    std::size_t n_conns = rand_in(rng, std::max<std::size_t>(lo, 1), limits.max_connections);
    sc.messages.resize(n_conns);

    std::vector<std::vector<Step>> per_conn(n_conns);
    for (std::size_t c = 0; c < n_conns; ++c) {
        // Max of two draws biases toward multi-message connections.
        std::size_t n_msgs = std::max(rand_in(rng, 1, limits.max_messages),
                                      rand_in(rng, 1, limits.max_messages));
        per_conn[c].push_back(Step{Step::Kind::Open, c, 0, 0, 0, 0, false});
        for (std::size_t m = 0; m < n_msgs; ++m) {
            Message msg(limits.message_size);
            for (Byte& b : msg) b = limits.alphabet[rng() % limits.alphabet.size()];
            sc.messages[c].push_back(msg);

            std::size_t off = 0;
            bool probed = false;
            while (off < limits.message_size) {
                std::size_t len = rand_in(rng, 1, limits.message_size - off);
                per_conn[c].push_back(Step{Step::Kind::SendChunk, c, m, off, len, 0, false});
                off += len;
                if (off < limits.message_size && !probed && coin(rng, 0.55)) {
                    // Opportunistic read between chunks; nothing should arrive.
                    per_conn[c].push_back(
                        Step{Step::Kind::RecvChunk, c, m, 0, 0, limits.message_size, true});
                    probed = true;
                }
            }
            if (coin(rng, 0.5)) {
                per_conn[c].push_back(
                    Step{Step::Kind::RecvChunk, c, m, 0, 0, limits.message_size, false});
            } else {
                std::size_t first = rand_in(rng, 1, limits.message_size);
                per_conn[c].push_back(Step{Step::Kind::RecvChunk, c, m, 0, 0, first, false});
                if (first < limits.message_size) {
                    per_conn[c].push_back(Step{Step::Kind::RecvChunk, c, m, 0, 0,
                                               limits.message_size - first, false});
                }
            }
        }
        if (coin(rng, 0.6)) {
            per_conn[c].push_back(Step{Step::Kind::RecvChunk, c, n_msgs ? n_msgs - 1 : 0, 0, 0,
                                       limits.message_size, true});
        }
        per_conn[c].push_back(Step{Step::Kind::Close, c, 0, 0, 0, 0, false});
    }

    // Random riffle preserving per-connection order.
    std::vector<std::size_t> cursor(n_conns, 0);
    std::size_t remaining = 0;
    for (const auto& steps : per_conn) remaining += steps.size();
    while (remaining > 0) {
        std::size_t pick = rng() % remaining;
        for (std::size_t c = 0; c < n_conns; ++c) {
            std::size_t left = per_conn[c].size() - cursor[c];
            if (pick < left) {
                sc.schedule.push_back(per_conn[c][cursor[c]++]);
                break;
            }
            pick -= left;
        }
        --remaining;
    }
    return sc;
}

bool RunOutcome::no_response() const {
    if (expected_reply_bytes == 0) return false;
    return std::none_of(trace.begin(), trace.end(), [](const NetworkEvent& ev) {
        return ev.type == NetEventType::FromServer;
    });
}

// --- TCP driver --------------------------------------------------------------

namespace {

struct Deadline {
    Clock::time_point at;
    int remaining_ms() const {
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(at - Clock::now());
        return std::max<long long>(0, ms.count());
    }
};

}  // namespace

RunOutcome run_scenario_tcp(const Scenario& sc, const std::string& host, std::uint16_t port,
                            const ScenarioLimits& limits) {
    RunOutcome out;
    for (const auto& per_conn : sc.messages) {
        out.expected_reply_bytes += per_conn.size() * sc.message_size;
    }

    std::vector<int> fds(sc.messages.size(), -1);
    auto overall = Deadline{Clock::now() + std::chrono::milliseconds(limits.scenario_budget_ms)};

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    inet_pton(AF_INET, host.c_str(), &addr.sin_addr);

    for (const Step& step : sc.schedule) {
        int& fd = fds[step.conn];
        switch (step.kind) {
            case Step::Kind::Open: {
                fd = ::socket(AF_INET, SOCK_STREAM, 0);
                if (fd < 0 || ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
                    out.connect_failed = true;
                    for (int f : fds) {
                        if (f >= 0) ::close(f);
                    }
                    return out;
                }
                int one = 1;
                setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
                int flags = fcntl(fd, F_GETFL, 0);
                fcntl(fd, F_SETFL, flags | O_NONBLOCK);
                out.trace.push_back(new_connection(static_cast<ConnectionId>(step.conn) + 1));
                break;
            }
            case Step::Kind::SendChunk: {
                if (fd < 0) break;
                const Message& msg = sc.messages[step.conn][step.msg];
                std::size_t done = 0;
                auto deadline =
                    Deadline{Clock::now() + std::chrono::milliseconds(limits.reply_timeout_ms)};
                while (done < step.len) {
                    ssize_t n = ::send(fd, msg.data() + step.offset + done, step.len - done,
                                       MSG_NOSIGNAL);
                    if (n > 0) {
                        for (ssize_t k = 0; k < n; ++k) {
                            out.trace.push_back(
                                to_server(static_cast<ConnectionId>(step.conn) + 1,
                                          msg[step.offset + done + static_cast<std::size_t>(k)]));
                        }
                        done += static_cast<std::size_t>(n);
                        continue;
                    }
                    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
                        pollfd p{fd, POLLOUT, 0};
                        int wait = std::min(deadline.remaining_ms(), overall.remaining_ms());
                        if (wait == 0 || ::poll(&p, 1, wait) <= 0) break;
                        continue;
                    }
                    break;  // peer reset; later steps on this socket will no-op
                }
                break;
            }
            case Step::Kind::RecvChunk: {
                if (fd < 0) break;
                std::size_t want = step.max_bytes;
                bool got_any = false;
                int budget_ms = step.probe ? limits.probe_timeout_ms : limits.reply_timeout_ms;
                auto deadline = Deadline{Clock::now() + std::chrono::milliseconds(budget_ms)};
                while (want > 0) {
                    Byte buf[512];
                    std::size_t ask = std::min(want, sizeof buf);
                    ssize_t n = ::recv(fd, buf, ask, 0);
                    if (n > 0) {
                        for (ssize_t k = 0; k < n; ++k) {
                            out.trace.push_back(from_server(
                                static_cast<ConnectionId>(step.conn) + 1,
                                buf[static_cast<std::size_t>(k)]));
                        }
                        want -= static_cast<std::size_t>(n);
                        got_any = true;
                        continue;
                    }
                    if (n == 0) break;  // server closed; trace is simply truncated
                    if (errno == EAGAIN || errno == EWOULDBLOCK) {
                        pollfd p{fd, POLLIN, 0};
                        int wait = std::min(deadline.remaining_ms(), overall.remaining_ms());
                        // Once part of the reply arrived, a short silence
                        // means the rest is not coming (missing bytes only
                        // truncate the trace anyway).
                        if (got_any) wait = std::min(wait, 250);
                        if (wait == 0 || ::poll(&p, 1, wait) <= 0) break;
                        continue;
                    }
                    break;
                }
                break;
            }
            case Step::Kind::Close:
                if (fd >= 0) {
                    ::close(fd);
                    fd = -1;
                }
                break;
        }
    }
    for (int f : fds) {
        if (f >= 0) ::close(f);
    }
    return out;
}

// --- In-process model driver -------------------------------------------------

namespace {

struct ModelWorld {
    SwapContext ctx;
    ModelMutant mutant;
    NetworkState ns;
    ServerState st;
    std::mt19937_64 rng;

    // One model iteration with a randomly chosen legal response. Returns
    // false when no iteration changes anything (quiescent).
    bool pump_once() {
        struct Option {
            ModelStep step;
            NetworkTrace evs;
            NetworkState ns_after;
            bool progress;
        };
        std::vector<Option> options;
        for (const ModelStep& step : model_step(ctx, st, mutant)) {
            NetworkTrace evs = impl_event_to_network(step.effect, step.response);
            NetworkState cur = ns;
            bool ok = true;
            for (const NetworkEvent& ev : evs) {
                auto next = server_transition(ev, cur);
                if (!next) {
                    ok = false;
                    break;
                }
                cur = std::move(*next);
            }
            if (!ok) continue;
            bool progress = !evs.empty() || !(step.next == st);
            options.push_back(Option{step, std::move(evs), std::move(cur), progress});
        }
        if (options.empty()) return false;

        std::vector<std::size_t> harmless;  // progress without deleting connections
        std::vector<std::size_t> deleting;
        for (std::size_t i = 0; i < options.size(); ++i) {
            if (!options[i].progress) continue;
            bool deletes = options[i].step.effect.kind == EffectKind::RecvBytes &&
                           (is_failure(options[i].step.response) ||
                            as_bytes(options[i].step.response).empty());
            deletes = deletes || (options[i].step.effect.kind == EffectKind::SendBytes &&
                                  is_failure(options[i].step.response));
            (deletes ? deleting : harmless).push_back(i);
        }
        std::size_t pick;
        if (!harmless.empty()) {
            if (!deleting.empty() && coin(rng, 0.02)) {
                pick = deleting[rng() % deleting.size()];  // rare injected failure
            } else {
                pick = harmless[rng() % harmless.size()];
            }
        } else {
            return false;  // quiescent: nothing useful to do
        }
        ns = std::move(options[pick].ns_after);
        st = options[pick].step.next;
        return true;
    }
};

}  // namespace

RunOutcome run_scenario_model(const Scenario& sc, ModelMutant mutant, std::uint64_t oracle_seed) {
    RunOutcome out;
    std::set<Byte> alpha_set;
    for (const auto& per_conn : sc.messages) {
        out.expected_reply_bytes += per_conn.size() * sc.message_size;
        for (const Message& m : per_conn) alpha_set.insert(m.begin(), m.end());
    }
    EnumConfig cfg;
    cfg.message_size = sc.message_size;
    cfg.alphabet.assign(alpha_set.begin(), alpha_set.end());
    if (cfg.alphabet.empty()) cfg.alphabet = {0x00};
    cfg.conn_ids.clear();
    for (std::size_t c = 0; c < sc.messages.size(); ++c) {
        cfg.conn_ids.push_back(static_cast<ConnectionId>(c) + 1);
    }

    ModelWorld world{make_swap_context(cfg), mutant, NetworkState{},
                     ServerState{{}, zeros_message(sc.message_size)},
                     std::mt19937_64(oracle_seed * 0x2545f4914f6cdd1dULL + sc.seed + 7)};

    auto client = [&](const NetworkEvent& ev) {
        auto next = client_transition(ev, world.ns);
        if (!next) return false;
        world.ns = std::move(*next);
        out.trace.push_back(ev);
        return true;
    };

    for (const Step& step : sc.schedule) {
        ConnectionId conn = static_cast<ConnectionId>(step.conn) + 1;
        switch (step.kind) {
            case Step::Kind::Open:
                client(new_connection(conn));
                break;
            case Step::Kind::SendChunk: {
                const Message& msg = sc.messages[step.conn][step.msg];
                for (std::size_t k = 0; k < step.len; ++k) {
                    client(to_server(conn, msg[step.offset + k]));
                }
                std::size_t pumps = world.rng() % 4;
                for (std::size_t k = 0; k < pumps; ++k) world.pump_once();
                break;
            }
            case Step::Kind::RecvChunk: {
                std::size_t want = step.max_bytes;
                std::size_t stalls = 0;
                std::size_t stall_cap = step.probe ? 2 : 64;
                while (want > 0 && stalls < stall_cap) {
                    const ConnectionNetState* cs = world.ns.find(conn);
                    if (cs && !cs->from_server.empty()) {
                        client(from_server(conn, cs->from_server.front()));
                        --want;
                        continue;
                    }
                    if (!world.pump_once()) ++stalls;
                }
                break;
            }
            case Step::Kind::Close:
                break;  // closes are invisible to the model
        }
    }
    return out;
}

// --- Shrinking ----------------------------------------------------------------

namespace {

Scenario drop_connection(const Scenario& sc, std::size_t victim) {
    Scenario out;
    out.seed = sc.seed;
    out.message_size = sc.message_size;
    for (std::size_t c = 0; c < sc.messages.size(); ++c) {
        if (c != victim) out.messages.push_back(sc.messages[c]);
    }
    for (const Step& s : sc.schedule) {
        if (s.conn == victim) continue;
        Step t = s;
        if (t.conn > victim) --t.conn;
        out.schedule.push_back(t);
    }
    return out;
}

Scenario drop_message(const Scenario& sc, std::size_t conn, std::size_t msg) {
    Scenario out;
    out.seed = sc.seed;
    out.message_size = sc.message_size;
    out.messages = sc.messages;
    out.messages[conn].erase(out.messages[conn].begin() + static_cast<std::ptrdiff_t>(msg));
    for (const Step& s : sc.schedule) {
        if (s.conn == conn && (s.kind == Step::Kind::SendChunk || s.kind == Step::Kind::RecvChunk)) {
            if (s.msg == msg) continue;
            Step t = s;
            if (t.msg > msg) --t.msg;
            out.schedule.push_back(t);
            continue;
        }
        out.schedule.push_back(s);
    }
    return out;
}

std::optional<Scenario> merge_chunks(const Scenario& sc, std::size_t i) {
    const Step& first = sc.schedule[i];
    if (first.kind != Step::Kind::SendChunk) return std::nullopt;
    for (std::size_t j = i + 1; j < sc.schedule.size(); ++j) {
        const Step& second = sc.schedule[j];
        if (second.kind != Step::Kind::SendChunk || second.conn != first.conn ||
            second.msg != first.msg) {
            continue;
        }
        if (second.offset != first.offset + first.len) return std::nullopt;
        Scenario out = sc;
        out.schedule[i].len += second.len;
        out.schedule.erase(out.schedule.begin() + static_cast<std::ptrdiff_t>(j));
        return out;
    }
    return std::nullopt;
}

std::optional<Scenario> drop_recv_step(const Scenario& sc, std::size_t i) {
    if (sc.schedule[i].kind != Step::Kind::RecvChunk) return std::nullopt;
    Scenario out = sc;
    out.schedule.erase(out.schedule.begin() + static_cast<std::ptrdiff_t>(i));
    return out;
}

}  // namespace

Scenario shrink(const Scenario& sc, const std::function<bool(const Scenario&)>& failing) {
    Scenario cur = sc;
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t c = 0; c < cur.messages.size() && !improved; ++c) {
            Scenario cand = drop_connection(cur, c);
            if (failing(cand)) {
                cur = std::move(cand);
                improved = true;
            }
        }
        if (improved) continue;
        for (std::size_t c = 0; c < cur.messages.size() && !improved; ++c) {
            for (std::size_t m = 0; m < cur.messages[c].size() && !improved; ++m) {
                Scenario cand = drop_message(cur, c, m);
                if (failing(cand)) {
                    cur = std::move(cand);
                    improved = true;
                }
            }
        }
        if (improved) continue;
        for (std::size_t i = 0; i < cur.schedule.size() && !improved; ++i) {
            if (auto cand = merge_chunks(cur, i); cand && failing(*cand)) {
                cur = std::move(*cand);
                improved = true;
            }
        }
        if (improved) continue;
        for (std::size_t i = 0; i < cur.schedule.size() && !improved; ++i) {
            if (auto cand = drop_recv_step(cur, i); cand && failing(*cand)) {
                cur = std::move(*cand);
                improved = true;
            }
        }
    }
    return cur;
}

// --- Campaign ------------------------------------------------------------------

namespace {

ModelMutant model_mutant_for(int mutant) {
    switch (mutant) {
        case 0: return ModelMutant::None;
        case 3: return ModelMutant::EchoReply;
        case 7: return ModelMutant::NoStore;
        default:
            throw std::invalid_argument(
                "model target supports only mutants 0 (none), 3 (echo) and 7 (no-store)");
    }
}

ScenarioVerdict check_scenario(const CampaignTarget& target, int mutant, const Scenario& sc,
                               const ScenarioLimits& limits) {
    ScenarioVerdict v;
    v.seed = sc.seed;
    RunOutcome out;
    if (target.kind == CampaignTarget::Kind::Tcp) {
        ServerProcess server(target.server_binary, mutant, target.message_size);
        if (!server.ok()) {
            v.kind = ScenarioVerdict::Kind::Inconclusive;
            return v;
        }
        out = run_scenario_tcp(sc, "127.0.0.1", server.port(), limits);
        server.stop();
    } else {
        out = run_scenario_model(sc, model_mutant_for(mutant), sc.seed);
    }
    v.trace = out.trace;
    if (out.connect_failed) {
        v.kind = ScenarioVerdict::Kind::Inconclusive;
        return v;
    }
    if (out.no_response()) {
        v.kind = ScenarioVerdict::Kind::Discarded;
        return v;
    }
    EnumConfig cfg;
    cfg.message_size = target.message_size;
    SwapContext ctx = make_swap_context(cfg);
    v.check = spec_behavior_member(ctx, out.trace);
    switch (v.check.kind) {
        case Verdict::Kind::Accepted: v.kind = ScenarioVerdict::Kind::Accepted; break;
        case Verdict::Kind::Rejected: v.kind = ScenarioVerdict::Kind::Rejected; break;
        case Verdict::Kind::BudgetExceeded: v.kind = ScenarioVerdict::Kind::Inconclusive; break;
    }
    return v;
}

}  // namespace

ScenarioVerdict run_and_check(const CampaignTarget& target, int mutant, std::uint64_t seed,
                              const ScenarioLimits& limits) {
    ScenarioLimits use = limits;
    use.message_size = target.message_size;
    Scenario sc = gen_scenario(seed, use);
    return check_scenario(target, mutant, sc, use);
}

TestReport run_seed_sweep(const CampaignTarget& target, int mutant, std::uint64_t first_seed,
                          std::size_t count, const CampaignOptions& opts) {
    TestReport report;
    auto t0 = Clock::now();
    ScenarioLimits limits = opts.limits;
    limits.message_size = target.message_size;

    for (std::size_t k = 0; k < count; ++k) {
        std::uint64_t seed = first_seed + k;
        Scenario sc = gen_scenario(seed, limits);
        ScenarioVerdict v = check_scenario(target, mutant, sc, limits);
        ++report.scenarios_run;
        switch (v.kind) {
            case ScenarioVerdict::Kind::Accepted: ++report.accepted; break;
            case ScenarioVerdict::Kind::Inconclusive: ++report.inconclusive; break;
            case ScenarioVerdict::Kind::Discarded: ++report.discards; break;
            case ScenarioVerdict::Kind::Rejected: {
                ++report.rejected;
                MutantOutcome cex;
                cex.id = mutant;
                cex.killed = true;
                cex.scenarios_to_kill = report.scenarios_run;
                cex.killing_seed = seed;
                Scenario shrunk = sc;
                cex.counterexample = v.trace;
                if (opts.shrink_counterexamples) {
                    // Shrink probes run with short read deadlines: a rejection
                    // that only reproduces with long waits simply stops the
                    // shrink early, which is sound (we keep the larger case).
                    ScenarioLimits quick = limits;
                    quick.reply_timeout_ms = std::min(quick.reply_timeout_ms, 300);
                    quick.scenario_budget_ms = std::min(quick.scenario_budget_ms, 1500);
                    std::size_t evals = 0;
                    NetworkTrace last_rejected;
                    auto failing = [&](const Scenario& cand) {
                        if (++evals > 300) return false;
                        ScenarioVerdict probe = check_scenario(target, mutant, cand, quick);
                        if (probe.kind != ScenarioVerdict::Kind::Rejected) return false;
                        last_rejected = probe.trace;
                        return true;
                    };
                    shrunk = shrink(sc, failing);
                    // Report a trace that actually was rejected; timing-
                    // dependent bugs need not reproduce on a fresh run.
                    if (!last_rejected.empty()) cex.counterexample = std::move(last_rejected);
                }
                cex.shrunk = shrunk;
                report.counterexample = std::move(cex);
                report.elapsed_s = seconds_since(t0);
                return report;
            }
        }
        if (report.discards >= opts.discard_cap) break;
        if (seconds_since(t0) > opts.time_budget_s) break;
    }
    report.elapsed_s = seconds_since(t0);
    return report;
}

TestReport mutation_campaign(const CampaignTarget& target, const CampaignOptions& opts) {
    TestReport report;
    auto t0 = Clock::now();
    for (const MutantInfo& info : mutant_registry()) {
        if (target.kind == CampaignTarget::Kind::Model && info.id != 3 && info.id != 7) {
            continue;  // the model exposes only the echo and no-store bugs
        }
        auto mt0 = Clock::now();
        MutantOutcome outcome;
        outcome.id = info.id;
        outcome.description = info.description;

        TestReport sweep = run_seed_sweep(target, info.id, opts.base_seed, opts.max_scenarios,
                                          opts);
        report.scenarios_run += sweep.scenarios_run;
        report.accepted += sweep.accepted;
        report.rejected += sweep.rejected;
        report.inconclusive += sweep.inconclusive;
        report.discards += sweep.discards;
        outcome.discards = sweep.discards;
        if (sweep.counterexample.has_value()) {
            outcome.killed = true;
            outcome.scenarios_to_kill = sweep.counterexample->scenarios_to_kill;
            outcome.killing_seed = sweep.counterexample->killing_seed;
            outcome.counterexample = sweep.counterexample->counterexample;
            outcome.shrunk = sweep.counterexample->shrunk;
        }
        outcome.elapsed_s = seconds_since(mt0);
        report.mutants.push_back(std::move(outcome));
    }
    report.elapsed_s = seconds_since(t0);
    return report;
}

std::string report_to_json(const TestReport& report) {
    nlohmann::json j;
    j["scenarios_run"] = report.scenarios_run;
    j["verdicts"] = {{"accepted", report.accepted},
                     {"rejected", report.rejected},
                     {"inconclusive", report.inconclusive},
                     {"discarded", report.discards}};
    j["elapsed_s"] = report.elapsed_s;
    if (report.counterexample.has_value()) {
        const MutantOutcome& c = *report.counterexample;
        j["counterexample"] = {{"seed", c.killing_seed},
                               {"scenarios_to_kill", c.scenarios_to_kill},
                               {"trace", show_network_trace(c.counterexample)}};
    } else {
        j["counterexample"] = nullptr;
    }
    j["mutants"] = nlohmann::json::array();
    for (const MutantOutcome& m : report.mutants) {
        j["mutants"].push_back({{"id", m.id},
                                {"description", m.description},
                                {"killed", m.killed},
                                {"tests_to_kill", m.scenarios_to_kill},
                                {"discards", m.discards},
                                {"elapsed_s", m.elapsed_s},
                                {"seed", m.killing_seed}});
    }
    return j.dump(2);
}

// --- Subprocess control --------------------------------------------------------

ServerProcess::ServerProcess(const std::string& binary, int mutant, std::size_t message_size) {
    int pipefd[2];
    if (pipe(pipefd) != 0) return;
    int pid = fork();
    if (pid < 0) {
        ::close(pipefd[0]);
        ::close(pipefd[1]);
        return;
    }
    if (pid == 0) {
        dup2(pipefd[1], STDOUT_FILENO);
        ::close(pipefd[0]);
        ::close(pipefd[1]);
        std::string msize = std::to_string(message_size);
        std::string mut = std::to_string(mutant);
        std::vector<const char*> argv = {binary.c_str(), "serve", "--port", "0",
                                         "--message-size", msize.c_str()};
        if (mutant != 0) {
            argv.push_back("--mutant");
            argv.push_back(mut.c_str());
        }
        argv.push_back(nullptr);
        execv(binary.c_str(), const_cast<char* const*>(argv.data()));
        _exit(127);
    }
    pid_ = pid;
    ::close(pipefd[1]);

    // Wait for the "listening port=N" line.
    std::string line;
    auto deadline = Clock::now() + std::chrono::seconds(10);
    while (Clock::now() < deadline) {
        pollfd p{pipefd[0], POLLIN, 0};
        if (::poll(&p, 1, 100) <= 0) continue;
        char ch;
        ssize_t n = ::read(pipefd[0], &ch, 1);
        if (n <= 0) break;
        if (ch == '\n') {
            auto at = line.find("listening port=");
            if (at != std::string::npos) {
                port_ = static_cast<std::uint16_t>(
                    std::stoi(line.substr(at + std::strlen("listening port="))));
                break;
            }
            line.clear();
        } else {
            line.push_back(ch);
        }
    }
    ::close(pipefd[0]);
    if (port_ == 0) stop();
}

ServerProcess::~ServerProcess() { stop(); }

void ServerProcess::stop() {
    if (pid_ > 0) {
        kill(pid_, SIGKILL);
        int status = 0;
        waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

}  // namespace swapnet
