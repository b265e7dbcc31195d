#include "swapnet/impl_model.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace swapnet {

std::string show_server_state(const ServerState& st) {
    std::ostringstream os;
    os << "{conns=[";
    for (std::size_t i = 0; i < st.conns.size(); ++i) {
        const Connection& c = st.conns[i];
        if (i) os << ", ";
        os << c.id << ':';
        switch (c.state) {
            case ConnState::Recving: os << "R" << show_bytes(c.request_buf); break;
            case ConnState::Sending: os << "S" << show_bytes(c.response_buf); break;
            case ConnState::Deleted: os << "D"; break;
        }
    }
    os << "], last=" << show_bytes(st.last_full_msg) << "}";
    return os.str();
}

std::vector<Connection> replace_when(const std::function<bool(const Connection&)>& pred,
                                     const Connection& replacement,
                                     const std::vector<Connection>& conns) {
    std::vector<Connection> out;
    out.reserve(conns.size());
    for (const Connection& c : conns) {
        out.push_back(pred(c) ? replacement : c);
    }
    return out;
}

ITree<std::optional<Connection>> accept_connection(const SwapContext& ctx, EndpointId endpoint) {
    using T = ITree<std::optional<Connection>>;
    return T::vis(ctx.effects(), accept_effect(endpoint), [](const Value& r) {
        if (is_no_conn(r)) return T::ret(std::nullopt);
        return T::ret(Connection{as_int(r), ConnState::Recving, {}, {}});
    });
}

ITree<std::pair<Connection, Message>> process_conn(const SwapContext& ctx,
                                                   std::size_t buffer_size, Connection conn,
                                                   Message last_full_msg, ModelMutant mutant) {
    using T = ITree<std::pair<Connection, Message>>;
    if (conn.state == ConnState::Recving) {
        std::size_t want = ctx.message_size - conn.request_buf.size();
        std::size_t maxlen = std::min(buffer_size, want);
        return T::vis(
            ctx.effects(), recv_bytes_effect(conn.id, maxlen),
            [ctx, conn, last_full_msg, mutant](const Value& r) {
                if (is_failure(r) || as_bytes(r).empty()) {
                    // Error or orderly close; the connection is never serviced again.
                    return T::ret({Connection{conn.id, ConnState::Deleted, {}, {}},
                                   last_full_msg});
                }
                Connection next = conn;
                const Bytes& got = as_bytes(r);
                next.request_buf.insert(next.request_buf.end(), got.begin(), got.end());
                if (next.request_buf.size() < ctx.message_size) {
                    return T::ret({next, last_full_msg});
                }
                Message completed = next.request_buf;
                next.request_buf.clear();
                next.state = ConnState::Sending;
                next.response_buf =
                    mutant == ModelMutant::EchoReply ? completed : last_full_msg;
                Message stored =
                    mutant == ModelMutant::NoStore ? last_full_msg : completed;
                return T::ret({next, stored});
            });
    }
    if (conn.state == ConnState::Sending) {
        return T::vis(ctx.effects(), send_bytes_effect(conn.id, conn.response_buf),
                      [conn, last_full_msg](const Value& r) {
                          if (is_failure(r)) {
                              return T::ret({Connection{conn.id, ConnState::Deleted, {}, {}},
                                             last_full_msg});
                          }
                          Connection next = conn;
                          auto sent = static_cast<std::size_t>(as_int(r));
                          next.response_buf.erase(next.response_buf.begin(),
                                                  next.response_buf.begin() +
                                                      static_cast<std::ptrdiff_t>(sent));
                          if (next.response_buf.empty()) next.state = ConnState::Recving;
                          return T::ret({next, last_full_msg});
                      });
    }
    throw std::logic_error("process_conn: called on a DELETED connection");
}

ITree<LoopResult> select_loop_body(const SwapContext& ctx, EndpointId endpoint,
                                   std::size_t buffer_size, ServerState st,
                                   ModelMutant mutant) {
    using T = ITree<LoopResult>;
    auto accept_branch = bind(accept_connection(ctx, endpoint),
                              [st](const std::optional<Connection>& r) {
                                  if (!r.has_value()) return T::ret({true, st});
                                  ServerState next = st;
                                  next.conns.insert(next.conns.begin(), *r);
                                  return T::ret({true, next});
                              });

    std::vector<Connection> candidates;
    for (const Connection& c : st.conns) {
        if (c.state == ConnState::Recving) candidates.push_back(c);
    }
    for (const Connection& c : st.conns) {
        if (c.state == ConnState::Sending) candidates.push_back(c);
    }
    if (candidates.empty()) return accept_branch;

    auto service_branch =
        choose_with(ctx.effects(), candidates, [ctx, buffer_size, st, mutant](const Connection& c) {
            return bind(process_conn(ctx, buffer_size, c, st.last_full_msg, mutant),
                        [st](const std::pair<Connection, Message>& r) {
                            const auto& [updated, last] = r;
                            auto conns = replace_when(
                                [&updated](const Connection& x) {
                                    return (x.state == ConnState::Recving ||
                                            x.state == ConnState::Sending) &&
                                           x.id == updated.id;
                                },
                                updated, st.conns);
                            return ITree<LoopResult>::ret({true, ServerState{conns, last}});
                        });
        });
    return or_(ctx.effects(), accept_branch, service_branch);
}

ITree<Unit> impl_model_from(const SwapContext& ctx, EndpointId endpoint,
                            std::size_t buffer_size, ServerState st, ModelMutant mutant) {
    return repeat_loop(st, [ctx, endpoint, buffer_size, mutant](const ServerState& s) {
        return select_loop_body(ctx, endpoint, buffer_size, s, mutant);
    });
}

ITree<Unit> impl_model(const SwapContext& ctx, EndpointId endpoint, std::size_t buffer_size,
                       ModelMutant mutant) {
    return impl_model_from(ctx, endpoint, buffer_size,
                           ServerState{{}, zeros_message(ctx.message_size)}, mutant);
}

std::vector<ModelStep> model_step(const SwapContext& ctx, const ServerState& st,
                                  ModelMutant mutant) {
    auto tree = select_loop_body(ctx, /*endpoint=*/0, ctx.message_size, st, mutant);
    EnumerateOptions opts;
    opts.max_visible = 1;
    opts.max_steps = 4096;
    auto res = enumerate_traces(ctx.effects(), tree, opts);
    std::vector<ModelStep> steps;
    for (const auto& tr : res.traces) {
        if (!tr.result.has_value() || tr.events.size() != 1) continue;
        steps.push_back(ModelStep{tr.events[0].effect, tr.events[0].response,
                                  tr.result->second});
    }
    return steps;
}

NetworkTrace impl_event_to_network(const Effect& effect, const Value& response) {
    NetworkTrace out;
    switch (effect.kind) {
        case EffectKind::Accept:
            if (is_int(response)) out.push_back(new_connection(as_int(response)));
            break;
        case EffectKind::RecvBytes:
            if (is_bytes(response)) {
                ConnectionId c = as_int(effect.args.at(0));
                for (Byte b : as_bytes(response)) out.push_back(to_server(c, b));
            }
            break;
        case EffectKind::SendBytes:
            if (is_int(response)) {
                ConnectionId c = as_int(effect.args.at(0));
                const Bytes& payload = as_bytes(effect.args.at(1));
                auto n = static_cast<std::size_t>(as_int(response));
                for (std::size_t i = 0; i < n; ++i) out.push_back(from_server(c, payload[i]));
            }
            break;
        default:
            break;
    }
    return out;
}

ModelRun run_model_script(const SwapContext& ctx, const std::vector<Value>& script,
                          ModelMutant mutant, std::size_t max_events) {
    ModelRun run;
    const EffectSig& sig = ctx.effects();

    // Walk the loop body iteration by iteration; this visits the same effect
    // sequence as the full impl_model tree while keeping the state visible
    // at each loop head.
    std::size_t pos = 0;
    ServerState st{{}, zeros_message(ctx.message_size)};
    ITree<LoopResult> cur = select_loop_body(ctx, 0, ctx.message_size, st, mutant);

    std::size_t guard = 0;
    while (run.log.size() < max_events) {
        if (++guard > max_events * 64 + 1024) break;
        if (cur.is_ret()) {
            st = cur.ret_value().second;
            run.final_state = st;
            cur = select_loop_body(ctx, 0, ctx.message_size, st, mutant);
            continue;
        }
        if (cur.is_tau()) {
            cur = cur.step();
            continue;
        }
        const Effect& e = cur.effect();
        if (pos == script.size()) {
            run.script_exhausted = true;
            break;
        }
        const Value& resp = script[pos++];
        if (!sig.response_in_domain(e, resp)) {
            throw std::invalid_argument("run_model_script: response " + show_value(resp) +
                                        " not in domain of " + show_effect(e));
        }
        if (sig.is_visible(e.kind)) run.log.push_back(TraceEvent{e, resp});
        cur = cur.apply(resp);
    }
    run.final_state = st;
    return run;
}

namespace {

struct LogSearch {
    SwapContext ctx;
    const NetworkTrace& log;
    std::set<std::pair<std::size_t, ServerState>> visited;
    std::uint64_t budget = 1'000'000;

    bool go(std::size_t idx, const ServerState& st) {
        if (idx == log.size()) return true;
        if (budget == 0) return false;
        --budget;
        if (!visited.insert({idx, st}).second) return false;
        for (const ModelStep& step : model_step(ctx, st)) {
            NetworkTrace evs = impl_event_to_network(step.effect, step.response);
            if (idx + evs.size() > log.size()) continue;
            if (!std::equal(evs.begin(), evs.end(), log.begin() + static_cast<std::ptrdiff_t>(idx)))
                continue;
            if (go(idx + evs.size(), step.next)) return true;
        }
        return false;
    }
};

}  // namespace

bool explains_server_log(std::size_t message_size, const NetworkTrace& server_log) {
    // Enumerate over exactly the bytes and ids the log mentions.
    EnumConfig cfg;
    cfg.message_size = message_size;
    std::set<Byte> bytes;
    std::set<ConnectionId> ids;
    for (const NetworkEvent& ev : server_log) {
        ids.insert(ev.conn);
        if (ev.type != NetEventType::NewConnection) bytes.insert(ev.byte);
    }
    cfg.alphabet.assign(bytes.begin(), bytes.end());
    if (cfg.alphabet.empty()) cfg.alphabet = {0x00};
    cfg.conn_ids.assign(ids.begin(), ids.end());
    if (cfg.conn_ids.empty()) cfg.conn_ids = {1};

    SwapContext ctx = make_swap_context(cfg);
    LogSearch search{ctx, server_log};
    return search.go(0, ServerState{{}, zeros_message(message_size)});
}

}  // namespace swapnet
