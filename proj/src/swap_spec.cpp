#include "swapnet/swap_spec.hpp"

#include <stdexcept>

namespace swapnet {

SwapContext make_swap_context(const EnumConfig& cfg) {
    SwapContext ctx;
    ctx.sig = std::make_shared<const EffectSig>(swap_effect_sig(cfg));
    ctx.message_size = cfg.message_size;
    return ctx;
}

Message zeros_message(std::size_t message_size) {
    return Message(message_size, 0x00);
}

ITree<Unit> linear_spec_from(const SwapContext& ctx, SpecState st) {
    const EffectSig& sig = ctx.effects();
    auto accept_branch = ITree<Unit>::vis(
        sig, obs_connect_effect(st.conns), [ctx, st](const Value& c) {
            SpecState next = st;
            next.conns.insert(next.conns.begin(), as_int(c));
            return ITree<Unit>::defer([ctx, next] { return linear_spec_from(ctx, next); });
        });
    if (st.conns.empty()) return accept_branch;

    auto exchange_branch = choose_with(sig, st.conns, [ctx, st](const ConnectionId& c) {
        const EffectSig& s = ctx.effects();
        return ITree<Unit>::vis(s, obs_msg_to_server_effect(c), [ctx, st, c](const Value& msg) {
            const Message& m = as_bytes(msg);
            return ITree<Unit>::vis(
                ctx.effects(), obs_msg_from_server_effect(c, st.last_msg),
                [ctx, st, m](const Value&) {
                    SpecState next = st;
                    next.last_msg = m;
                    return ITree<Unit>::defer([ctx, next] { return linear_spec_from(ctx, next); });
                });
        });
    });
    return or_(sig, accept_branch, exchange_branch);
}

ITree<Unit> linear_spec(const SwapContext& ctx) {
    return linear_spec_from(ctx, SpecState{{}, zeros_message(ctx.message_size)});
}

NetworkTrace flatten_to_network(const SwapContext& ctx,
                                const std::vector<TraceEvent>& spec_events) {
    NetworkTrace out;
    for (const TraceEvent& ev : spec_events) {
        switch (ev.effect.kind) {
            case EffectKind::ObsConnect:
                out.push_back(new_connection(as_int(ev.response)));
                break;
            case EffectKind::ObsMsgToServer: {
                const Message& m = as_bytes(ev.response);
                if (m.size() != ctx.message_size) {
                    throw std::invalid_argument("flatten_to_network: malformed message length");
                }
                ConnectionId c = as_int(ev.effect.args.at(0));
                for (Byte b : m) out.push_back(to_server(c, b));
                break;
            }
            case EffectKind::ObsMsgFromServer: {
                ConnectionId c = as_int(ev.effect.args.at(0));
                const Message& m = as_bytes(ev.effect.args.at(1));
                if (m.size() != ctx.message_size) {
                    throw std::invalid_argument("flatten_to_network: malformed message length");
                }
                for (Byte b : m) out.push_back(from_server(c, b));
                break;
            }
            default:
                throw std::invalid_argument("flatten_to_network: unexpected event kind");
        }
    }
    return out;
}

namespace {

// Walk the spec tree against a server-side byte trace. Visible spec events
// consume message_size bytes (or one NewConnection); running out of input
// mid-event is acceptance, since traces are prefix-closed.
bool spec_trace_go(const SwapContext& ctx, const ITree<Unit>& t, const NetworkTrace& tr,
                   std::size_t idx, std::uint64_t& budget) {
    if (idx == tr.size()) return true;
    if (budget == 0) return false;
    --budget;
    const EffectSig& sig = ctx.effects();
    if (t.is_ret()) return false;
    if (t.is_tau()) return spec_trace_go(ctx, t.step(), tr, idx, budget);
    const Effect& e = t.effect();
    if (!sig.is_visible(e.kind)) {
        auto responses = sig.enumerate_responses(e);
        if (!responses) return false;
        for (const Value& x : *responses) {
            if (spec_trace_go(ctx, t.apply(x), tr, idx, budget)) return true;
        }
        return false;
    }
    switch (e.kind) {
        case EffectKind::ObsConnect: {
            const NetworkEvent& ev = tr[idx];
            if (ev.type != NetEventType::NewConnection) return false;
            Value c = int_value(ev.conn);
            if (!sig.response_in_domain(e, c)) return false;
            return spec_trace_go(ctx, t.apply(c), tr, idx + 1, budget);
        }
        case EffectKind::ObsMsgToServer: {
            ConnectionId c = as_int(e.args.at(0));
            Message m;
            std::size_t i = idx;
            while (m.size() < ctx.message_size) {
                if (i == tr.size()) return true;  // prefix ends mid-message
                if (tr[i].type != NetEventType::ToServer || tr[i].conn != c) return false;
                m.push_back(tr[i].byte);
                ++i;
            }
            return spec_trace_go(ctx, t.apply(bytes_value(m)), tr, i, budget);
        }
        case EffectKind::ObsMsgFromServer: {
            ConnectionId c = as_int(e.args.at(0));
            const Message& m = as_bytes(e.args.at(1));
            std::size_t i = idx;
            for (Byte b : m) {
                if (i == tr.size()) return true;  // prefix ends mid-message
                if (tr[i].type != NetEventType::FromServer || tr[i].conn != c ||
                    tr[i].byte != b) {
                    return false;
                }
                ++i;
            }
            return spec_trace_go(ctx, t.apply(unit_value()), tr, i, budget);
        }
        default:
            return false;
    }
}

}  // namespace

bool is_spec_trace(const SwapContext& ctx, const NetworkTrace& tr) {
    std::uint64_t budget = 1'000'000;
    return spec_trace_go(ctx, linear_spec(ctx), tr, 0, budget);
}

}  // namespace swapnet
