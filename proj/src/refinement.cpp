#include "swapnet/refinement.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace swapnet {

namespace {

// A spec step the checker may commit at a linearization point: either one
// accepted connection or one complete request/reply exchange.
struct SpecMove {
    NetworkTrace events;
    ITree<Unit> next;
    bool is_swap = false;
};

void collect_visible_positions(const EffectSig& sig, const ITree<Unit>& t,
                               std::vector<ITree<Unit>>& out, std::size_t guard) {
    if (guard == 0) return;
    if (t.is_ret()) return;
    if (t.is_tau()) {
        collect_visible_positions(sig, t.step(), out, guard - 1);
        return;
    }
    const Effect& e = t.effect();
    if (sig.is_visible(e.kind)) {
        out.push_back(t);
        return;
    }
    auto responses = sig.enumerate_responses(e);
    if (!responses) return;
    for (const Value& x : *responses) {
        collect_visible_positions(sig, t.apply(x), out, guard - 1);
    }
}

// Spec steps enabled in ns: swaps on connections with a complete buffered
// request (tried first, in the tree's own order) then accepts of pending
// connections in ascending id order.
std::vector<SpecMove> spec_moves(const SwapContext& ctx, const ITree<Unit>& spec,
                                 const NetworkState& ns) {
    const EffectSig& sig = ctx.effects();
    std::vector<ITree<Unit>> positions;
    collect_visible_positions(sig, spec, positions, 64);

    std::vector<SpecMove> swaps;
    std::vector<SpecMove> accepts;
    for (const ITree<Unit>& pos : positions) {
        const Effect& e = pos.effect();
        if (e.kind == EffectKind::ObsConnect) {
            for (const auto& [id, cs] : ns.conns) {
                if (cs.status != ConnectionStatus::Pending) continue;
                Value v = int_value(id);
                if (!sig.response_in_domain(e, v)) continue;
                accepts.push_back(SpecMove{{new_connection(id)}, pos.apply(v), false});
            }
        } else if (e.kind == EffectKind::ObsMsgToServer) {
            ConnectionId c = as_int(e.args.at(0));
            const ConnectionNetState* cs = ns.find(c);
            if (!cs || cs->to_server.size() < ctx.message_size) continue;
            Message m(cs->to_server.begin(),
                      cs->to_server.begin() + static_cast<std::ptrdiff_t>(ctx.message_size));
            SpecMove mv;
            mv.is_swap = true;
            for (Byte b : m) mv.events.push_back(to_server(c, b));
            ITree<Unit> next = pos.apply(bytes_value(m));
            while (next.is_tau()) next = next.step();
            if (next.is_vis() && next.effect().kind == EffectKind::ObsMsgFromServer) {
                const Effect& fe = next.effect();
                ConnectionId fc = as_int(fe.args.at(0));
                for (Byte b : as_bytes(fe.args.at(1))) mv.events.push_back(from_server(fc, b));
                next = next.apply(unit_value());
            }
            mv.next = next;
            swaps.push_back(std::move(mv));
        }
    }
    swaps.insert(swaps.end(), accepts.begin(), accepts.end());
    return swaps;
}

std::optional<NetworkState> apply_server_events(const NetworkTrace& events,
                                                const NetworkState& ns) {
    NetworkState cur = ns;
    for (const NetworkEvent& ev : events) {
        auto next = server_transition(ev, cur);
        if (!next) return std::nullopt;
        cur = std::move(*next);
    }
    return cur;
}

// Can spec/model steps ever unblock tc[i]? Opens block on an id already
// used, sends block on a connection never opened, and a present-but-wrong
// reply byte never changes: only an empty from_server queue is worth
// searching over.
bool permanently_blocked(const NetworkEvent& blocked, const NetworkState& ns) {
    if (blocked.type != NetEventType::FromServer) return true;
    const ConnectionNetState* cs = ns.find(blocked.conn);
    return cs != nullptr && !cs->from_server.empty();
}

// Track the spec position's own state next to the tree: linear_spec_from is
// a function of (conns, last_msg), so the pair keys a sound memo of failed
// search states.
std::string spec_state_key(const SpecState& sp) {
    std::ostringstream os;
    for (ConnectionId c : sp.conns) os << c << ',';
    os << '|';
    for (Byte b : sp.last_msg) os << static_cast<int>(b) << ',';
    return os.str();
}

SpecState spec_state_after(const SpecState& sp, const SpecMove& mv) {
    SpecState next = sp;
    if (mv.is_swap) {
        Message m;
        for (const NetworkEvent& ev : mv.events) {
            if (ev.type == NetEventType::ToServer) m.push_back(ev.byte);
        }
        next.last_msg = std::move(m);
    } else {
        next.conns.insert(next.conns.begin(), mv.events.front().conn);
    }
    return next;
}

// While the observation is blocked on a reply byte, no further client bytes
// arrive, so the set of in-flight request bytes is fixed. The block can only
// be resolved by a swap on that connection, and the first byte it emits is
// the store at that moment: either the current store or some complete
// message buffered on another connection. Anything else is hopeless.
bool reply_block_resolvable(const SwapContext& ctx, const NetworkEvent& blocked,
                            const NetworkState& ns, const Message& stored) {
    const ConnectionNetState* cs = ns.find(blocked.conn);
    std::size_t buffered = cs ? cs->to_server.size() : 0;
    if (buffered < ctx.message_size) return false;
    if (!stored.empty() && stored.front() == blocked.byte) return true;
    for (const auto& [d, dcs] : ns.conns) {
        if (d == blocked.conn) continue;
        for (std::size_t off = 0; off + ctx.message_size <= dcs.to_server.size();
             off += ctx.message_size) {
            if (dcs.to_server[off] == blocked.byte) return true;
        }
    }
    return false;
}

struct SpecMemberSearch {
    const SwapContext& ctx;
    const NetworkTrace& tc;
    std::uint64_t budget;
    bool budget_hit = false;
    std::unordered_set<std::string> failed;
    std::unordered_map<std::string, std::vector<SpecMove>> move_cache;

    // The enabled spec moves depend only on the spec state, the pending ids,
    // and each open connection's buffered request prefix.
    const std::vector<SpecMove>& moves_for(const ITree<Unit>& spec, const SpecState& sp,
                                           const NetworkState& ns) {
        std::ostringstream key;
        key << spec_state_key(sp) << '#';
        for (const auto& [id, cs] : ns.conns) {
            if (cs.status == ConnectionStatus::Pending) key << 'p' << id << ',';
            std::size_t take = std::min(cs.to_server.size(), ctx.message_size);
            if (take == ctx.message_size) {
                key << 'q' << id << ':';
                for (std::size_t k = 0; k < take; ++k) key << static_cast<int>(cs.to_server[k]) << ',';
            }
        }
        std::string k = key.str();
        auto it = move_cache.find(k);
        if (it != move_cache.end()) return it->second;
        return move_cache.emplace(std::move(k), spec_moves(ctx, spec, ns)).first->second;
    }

    bool go(std::size_t i, NetworkState ns, const ITree<Unit>& spec, const SpecState& sp,
            NetworkTrace& witness) {
        while (i < tc.size()) {
            auto next = client_transition(tc[i], ns);
            if (!next) break;
            ns = std::move(*next);
            ++i;
        }
        if (i == tc.size()) return true;
        if (permanently_blocked(tc[i], ns)) return false;
        if (!reply_block_resolvable(ctx, tc[i], ns, sp.last_msg)) return false;
        if (budget == 0) {
            budget_hit = true;
            return false;
        }
        --budget;
        std::string key =
            std::to_string(i) + '|' + ns.canonical_key() + '|' + spec_state_key(sp);
        if (failed.count(key)) return false;
        for (const SpecMove& mv : moves_for(spec, sp, ns)) {
            auto ns2 = apply_server_events(mv.events, ns);
            if (!ns2) continue;
            witness.insert(witness.end(), mv.events.begin(), mv.events.end());
            if (go(i, std::move(*ns2), mv.next, spec_state_after(sp, mv), witness)) return true;
            witness.resize(witness.size() - mv.events.size());
        }
        failed.insert(std::move(key));
        return false;
    }
};

}  // namespace

Verdict spec_behavior_member(const SwapContext& ctx, const NetworkTrace& tc,
                             const CheckOptions& opts) {
    SpecMemberSearch search{ctx, tc, opts.node_budget};
    CheckState st{NetworkState{}, linear_spec(ctx), {}};
    SpecState sp0{{}, zeros_message(ctx.message_size)};
    Verdict v;
    if (search.go(0, st.ns, st.spec_rest, sp0, st.witness)) {
        v.kind = Verdict::Kind::Accepted;
        v.witness = std::move(st.witness);
    } else if (search.budget_hit) {
        v.kind = Verdict::Kind::BudgetExceeded;
    } else {
        v.kind = Verdict::Kind::Rejected;
        v.counterexample = tc;
    }
    return v;
}

namespace {

EnumConfig tailored_config(const SwapContext& ctx, const NetworkTrace& tc) {
    EnumConfig cfg;
    cfg.message_size = ctx.message_size;
    std::set<Byte> bytes;
    std::set<ConnectionId> ids;
    for (const NetworkEvent& ev : tc) {
        ids.insert(ev.conn);
        if (ev.type == NetEventType::ToServer) bytes.insert(ev.byte);
    }
    cfg.alphabet.assign(bytes.begin(), bytes.end());
    if (cfg.alphabet.empty()) cfg.alphabet = {0x00};
    cfg.conn_ids.assign(ids.begin(), ids.end());
    if (cfg.conn_ids.empty()) cfg.conn_ids = {1};
    return cfg;
}

struct ImplMemberSearch {
    const SwapContext& ctx;
    const NetworkTrace& tc;
    ModelMutant mutant;
    std::uint64_t budget;
    bool budget_hit = false;
    // Best remaining step allowance already explored per state.
    std::unordered_map<std::string, std::size_t> visited;

    bool go(std::size_t i, NetworkState ns, const ServerState& st, std::size_t steps_left,
            NetworkTrace& witness) {
        while (i < tc.size()) {
            auto next = client_transition(tc[i], ns);
            if (!next) break;
            ns = std::move(*next);
            ++i;
        }
        if (i == tc.size()) return true;
        if (permanently_blocked(tc[i], ns)) return false;
        if (steps_left == 0) return false;
        if (budget == 0) {
            budget_hit = true;
            return false;
        }
        --budget;
        std::string key =
            std::to_string(i) + '|' + ns.canonical_key() + '|' + show_server_state(st);
        if (auto it = visited.find(key); it != visited.end() && it->second >= steps_left) {
            return false;
        }
        visited[key] = steps_left;
        for (const ModelStep& step : model_step(ctx, st, mutant)) {
            NetworkTrace evs = impl_event_to_network(step.effect, step.response);
            auto ns2 = apply_server_events(evs, ns);
            if (!ns2) continue;
            witness.insert(witness.end(), evs.begin(), evs.end());
            if (go(i, std::move(*ns2), step.next, steps_left - 1, witness)) return true;
            witness.resize(witness.size() - evs.size());
        }
        return false;
    }
};

}  // namespace

Verdict impl_behavior_member(const SwapContext& ctx, const NetworkTrace& tc, std::size_t depth,
                             ModelMutant mutant, const CheckOptions& opts) {
    SwapContext mctx = make_swap_context(tailored_config(ctx, tc));
    ImplMemberSearch search{mctx, tc, mutant, opts.node_budget};
    NetworkTrace witness;
    Verdict v;
    if (search.go(0, NetworkState{}, ServerState{{}, zeros_message(mctx.message_size)}, depth,
                  witness)) {
        v.kind = Verdict::Kind::Accepted;
        v.witness = std::move(witness);
    } else if (search.budget_hit) {
        v.kind = Verdict::Kind::BudgetExceeded;
    } else {
        v.kind = Verdict::Kind::Rejected;
        v.counterexample = tc;
    }
    return v;
}

namespace {

// One per-connection chain of spec events: the accept, then the complete
// messages the client sent on it, in order.
struct NaiveChain {
    ConnectionId conn = 0;
    std::vector<Message> messages;  // first `swaps` of these get serviced
    std::size_t swaps = 0;
};

bool naive_interleave(const std::vector<NaiveChain>& chains,
                      std::vector<std::size_t>& pos, NetworkTrace& ts, Message& stored,
                      const NetworkTrace& tc) {
    bool any_left = false;
    for (std::size_t k = 0; k < chains.size(); ++k) {
        // pos[k]: 0 = accept not yet emitted; j >= 1 = j-1 swaps emitted.
        if (pos[k] > chains[k].swaps) continue;
        any_left = true;
        const NaiveChain& ch = chains[k];
        std::size_t mark = ts.size();
        Message saved = stored;
        if (pos[k] == 0) {
            ts.push_back(new_connection(ch.conn));
        } else {
            const Message& m = ch.messages[pos[k] - 1];
            for (Byte b : m) ts.push_back(to_server(ch.conn, b));
            for (Byte b : stored) ts.push_back(from_server(ch.conn, b));
            stored = m;
        }
        ++pos[k];
        if (naive_interleave(chains, pos, ts, stored, tc)) return true;
        --pos[k];
        ts.resize(mark);
        stored = saved;
    }
    if (any_left) return false;
    return network_reordered(ts, tc, NetworkState{}) == SearchOutcome::Yes;
}

}  // namespace

bool naive_spec_member(const SwapContext& ctx, const NetworkTrace& tc) {
    std::vector<ConnectionId> opened;
    std::map<ConnectionId, Bytes> sent;
    for (const NetworkEvent& ev : tc) {
        if (ev.type == NetEventType::NewConnection) {
            if (std::find(opened.begin(), opened.end(), ev.conn) == opened.end()) {
                opened.push_back(ev.conn);
            }
        } else if (ev.type == NetEventType::ToServer) {
            sent[ev.conn].push_back(ev.byte);
        }
    }
    std::vector<NaiveChain> chains;
    for (ConnectionId c : opened) {
        NaiveChain ch;
        ch.conn = c;
        const Bytes& bytes = sent[c];
        for (std::size_t off = 0; off + ctx.message_size <= bytes.size();
             off += ctx.message_size) {
            ch.messages.emplace_back(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(off +
                                                                                 ctx.message_size));
        }
        chains.push_back(std::move(ch));
    }

    // Try every assignment of how many leading messages each connection gets
    // serviced for, then every interleaving of the resulting chains.
    std::size_t n = chains.size();
    std::vector<std::size_t> counts(n, 0);
    for (;;) {
        for (std::size_t k = 0; k < n; ++k) chains[k].swaps = counts[k];
        std::vector<std::size_t> pos(n, 0);
        NetworkTrace ts;
        Message stored = zeros_message(ctx.message_size);
        if (naive_interleave(chains, pos, ts, stored, tc)) return true;
        // next assignment (odometer over swap counts)
        std::size_t k = 0;
        while (k < n) {
            if (counts[k] < chains[k].messages.size()) {
                ++counts[k];
                std::fill(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(k), 0);
                break;
            }
            ++k;
        }
        if (k == n) break;
    }
    return false;
}

// --- Bounded network refinement -------------------------------------------

namespace {

// Explanation state on the spec side: the spec position (linear_spec_from of
// this data) plus the network of the witness run.
struct SpecExpl {
    SpecState sp;
    NetworkState ns;

    std::string key() const {
        std::ostringstream os;
        for (ConnectionId c : sp.conns) os << c << ',';
        os << '|';
        for (Byte b : sp.last_msg) os << static_cast<int>(b) << ',';
        os << '|' << ns.canonical_key();
        return os.str();
    }
};

using SpecSet = std::map<std::string, SpecExpl>;

void spec_closure(const SwapContext& ctx, SpecSet& set) {
    std::vector<SpecExpl> frontier;
    for (const auto& [k, v] : set) frontier.push_back(v);
    while (!frontier.empty()) {
        SpecExpl cur = std::move(frontier.back());
        frontier.pop_back();
        ITree<Unit> tree = linear_spec_from(ctx, cur.sp);
        for (const SpecMove& mv : spec_moves(ctx, tree, cur.ns)) {
            auto ns2 = apply_server_events(mv.events, cur.ns);
            if (!ns2) continue;
            SpecExpl next;
            next.ns = std::move(*ns2);
            next.sp = cur.sp;
            if (mv.is_swap) {
                Message m;
                for (const NetworkEvent& ev : mv.events) {
                    if (ev.type == NetEventType::ToServer) m.push_back(ev.byte);
                }
                next.sp.last_msg = std::move(m);
            } else {
                next.sp.conns.insert(next.sp.conns.begin(), mv.events.front().conn);
            }
            std::string k = next.key();
            if (set.emplace(std::move(k), next).second) frontier.push_back(std::move(next));
        }
    }
}

SpecSet spec_client_step(const SpecSet& set, const NetworkEvent& ev) {
    SpecSet out;
    for (const auto& [k, expl] : set) {
        auto ns2 = client_transition(ev, expl.ns);
        if (!ns2) continue;
        SpecExpl next{expl.sp, std::move(*ns2)};
        out.emplace(next.key(), std::move(next));
    }
    return out;
}

std::string spec_set_key(const SpecSet& set) {
    std::string out;
    for (const auto& [k, v] : set) {
        out += k;
        out += '#';
    }
    return out;
}

// Deleted records never influence future model steps (they are filtered out
// of the service candidates and replace_when ignores them), so the product
// search can identify states that differ only by deleted records.
ServerState prune_deleted(const ServerState& st) {
    ServerState out;
    out.last_full_msg = st.last_full_msg;
    for (const Connection& c : st.conns) {
        if (c.state != ConnState::Deleted) out.conns.push_back(c);
    }
    return out;
}

struct RefineSearch {
    SwapContext ctx;
    RefineConfig cfg;
    std::uint64_t budget;
    RefineResult result;
    std::unordered_map<std::string, std::size_t> visited;
    NetworkTrace path;

    using SpecSetPtr = std::shared_ptr<const SpecSet>;
    std::unordered_map<std::string, std::vector<ModelStep>> step_cache;
    // (spec set, client event) -> closed successor set, interned by key.
    std::unordered_map<std::string, SpecSetPtr> interned_sets;
    std::unordered_map<std::string, std::pair<std::string, SpecSetPtr>> client_step_cache;

    const std::vector<ModelStep>& steps_for(const ServerState& st) {
        std::string key = show_server_state(st);
        auto it = step_cache.find(key);
        if (it != step_cache.end()) return it->second;
        auto steps = model_step(ctx, st, cfg.mutant);
        for (ModelStep& s : steps) s.next = prune_deleted(s.next);
        return step_cache.emplace(std::move(key), std::move(steps)).first->second;
    }

    std::pair<std::string, SpecSetPtr> advance_specs(const std::string& specs_key,
                                                     const SpecSet& specs,
                                                     const NetworkEvent& ev) {
        std::string cache_key = specs_key + '!' + show_network_event(ev);
        auto it = client_step_cache.find(cache_key);
        if (it != client_step_cache.end()) return it->second;
        SpecSet next = spec_client_step(specs, ev);
        spec_closure(ctx, next);
        std::string next_key = spec_set_key(next);
        SpecSetPtr shared;
        if (auto in = interned_sets.find(next_key); in != interned_sets.end()) {
            shared = in->second;
        } else {
            shared = std::make_shared<const SpecSet>(std::move(next));
            interned_sets.emplace(next_key, shared);
        }
        auto entry = std::make_pair(std::move(next_key), std::move(shared));
        client_step_cache.emplace(std::move(cache_key), entry);
        return entry;
    }

    // Returns false when a counterexample (or budget exhaustion) ends the search.
    bool go(const ServerState& st, const NetworkState& ns, const std::string& specs_key,
            const SpecSet& specs, std::size_t events_left) {
        if (budget == 0) {
            result.kind = RefineResult::Kind::BudgetExceeded;
            return false;
        }
        --budget;
        ++result.nodes_visited;
        std::string key = show_server_state(st) + '|' + ns.canonical_key() + '|' + specs_key;
        if (auto it = visited.find(key); it != visited.end() && it->second >= events_left) {
            return true;
        }
        visited[std::move(key)] = events_left;

        // Client observations (these are the events that count toward depth).
        if (events_left > 0) {
            std::vector<NetworkEvent> candidates;
            for (ConnectionId c : cfg.enumeration.conn_ids) {
                if (ns.status(c) == ConnectionStatus::Closed) {
                    candidates.push_back(new_connection(c));
                } else {
                    for (Byte b : cfg.enumeration.alphabet) candidates.push_back(to_server(c, b));
                }
            }
            for (const auto& [c, cs] : ns.conns) {
                if (!cs.from_server.empty()) {
                    candidates.push_back(from_server(c, cs.from_server.front()));
                }
            }
            for (const NetworkEvent& ev : candidates) {
                auto ns2 = client_transition(ev, ns);
                if (!ns2) continue;
                ++result.traces_checked;
                auto [next_key, next] = advance_specs(specs_key, specs, ev);
                path.push_back(ev);
                if (next->empty()) {
                    result.kind = RefineResult::Kind::Counterexample;
                    result.counterexample = path;
                    return false;
                }
                if (!go(st, *ns2, next_key, *next, events_left - 1)) return false;
                path.pop_back();
            }
        }

        // Model iterations (server side; invisible to the observed trace).
        for (const ModelStep& step : steps_for(st)) {
            NetworkTrace evs = impl_event_to_network(step.effect, step.response);
            auto ns2 = apply_server_events(evs, ns);
            if (!ns2) continue;
            if (!go(step.next, *ns2, specs_key, specs, events_left)) return false;
        }
        return true;
    }
};

}  // namespace

RefineResult network_refines_bounded(const RefineConfig& cfg) {
    SwapContext ctx = make_swap_context(cfg.enumeration);
    RefineSearch search;
    search.ctx = ctx;
    search.cfg = cfg;
    search.budget = cfg.node_budget;
    search.result.kind = RefineResult::Kind::Holds;

    SpecSet specs;
    SpecExpl init{SpecState{{}, zeros_message(ctx.message_size)}, NetworkState{}};
    specs.emplace(init.key(), init);
    spec_closure(ctx, specs);

    ServerState st0{{}, zeros_message(ctx.message_size)};
    search.go(st0, NetworkState{}, spec_set_key(specs), specs, cfg.depth);
    RefineResult out = std::move(search.result);
    return out;
}

// --- Linearization-point instrumentation ----------------------------------

ExplainedRun explain_model_run(const SwapContext& ctx, const std::vector<TraceEvent>& log) {
    ExplainedRun out;
    std::map<ConnectionId, Bytes> request;
    Message stored = zeros_message(ctx.message_size);
    for (std::size_t idx = 0; idx < log.size(); ++idx) {
        const TraceEvent& ev = log[idx];
        switch (ev.effect.kind) {
            case EffectKind::Accept:
                if (is_int(ev.response)) {
                    out.witness.push_back(new_connection(as_int(ev.response)));
                    out.extension_points.push_back(idx);
                    ++out.accept_extensions;
                }
                break;
            case EffectKind::RecvBytes: {
                if (!is_bytes(ev.response)) break;
                ConnectionId c = as_int(ev.effect.args.at(0));
                Bytes& buf = request[c];
                const Bytes& got = as_bytes(ev.response);
                buf.insert(buf.end(), got.begin(), got.end());
                if (buf.size() < ctx.message_size) break;
                Message msg(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(ctx.message_size));
                buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(ctx.message_size));
                for (Byte b : msg) out.witness.push_back(to_server(c, b));
                out.extension_points.push_back(idx);
                ++out.swap_extensions;
                for (Byte b : stored) out.witness.push_back(from_server(c, b));
                out.extension_points.push_back(idx);
                ++out.swap_extensions;
                stored = msg;
                break;
            }
            default:
                break;
        }
    }
    out.witness_is_spec_trace = is_spec_trace(ctx, out.witness);
    return out;
}

bool linearization_points_check(const SwapContext& ctx, const std::vector<TraceEvent>& log,
                                const std::vector<std::size_t>& extension_points) {
    // Independently recompute where extension is legal: accept completions
    // and receipt events that complete a message.
    std::set<std::size_t> legal;
    std::map<ConnectionId, std::size_t> pending;
    for (std::size_t idx = 0; idx < log.size(); ++idx) {
        const TraceEvent& ev = log[idx];
        if (ev.effect.kind == EffectKind::Accept && is_int(ev.response)) {
            legal.insert(idx);
        } else if (ev.effect.kind == EffectKind::RecvBytes && is_bytes(ev.response)) {
            ConnectionId c = as_int(ev.effect.args.at(0));
            std::size_t& have = pending[c];
            have += as_bytes(ev.response).size();
            if (have >= ctx.message_size) {
                have -= ctx.message_size;
                legal.insert(idx);
            }
        }
    }
    return std::all_of(extension_points.begin(), extension_points.end(),
                       [&](std::size_t p) { return legal.count(p) != 0; });
}

}  // namespace swapnet
