#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "swapnet/itree.hpp"

namespace swapnet {

struct TraceEvent {
    Effect effect;
    Value response;

    friend bool operator==(const TraceEvent& a, const TraceEvent& b) {
        return a.effect == b.effect && a.response == b.response;
    }
    friend bool operator<(const TraceEvent& a, const TraceEvent& b) {
        if (!(a.effect == b.effect)) return a.effect < b.effect;
        return a.response < b.response;
    }
};

// A finite observation: visible events in order, plus the terminal result
// when the observation ends in termination.
template <typename R>
struct Trace {
    std::vector<TraceEvent> events;
    std::optional<R> result;

    friend bool operator==(const Trace& a, const Trace& b) {
        return a.events == b.events && a.result == b.result;
    }
    friend bool operator<(const Trace& a, const Trace& b) {
        if (a.events != b.events) return a.events < b.events;
        if (a.result.has_value() != b.result.has_value()) return !a.result.has_value();
        if (!a.result.has_value()) return false;
        return *a.result < *b.result;
    }
};

inline std::string show_trace_events(const std::vector<TraceEvent>& events) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (i) os << ", ";
        os << show_effect(events[i].effect) << "->" << show_value(events[i].response);
    }
    os << ']';
    return os.str();
}

struct TraceCheck {
    bool accepted = false;
    // Meaningful only when !accepted: some branch ran out of fuel, so the
    // rejection may mean "not within fuel" rather than "never".
    bool fuel_exhausted = false;
};

namespace detail {

template <typename R>
bool is_trace_go(const EffectSig& sig, const ITree<R>& t, const Trace<R>& tr, std::size_t idx,
                 std::size_t fuel, bool& exhausted) {
    if (idx == tr.events.size() && !tr.result.has_value()) return true;  // prefix closure
    if (fuel == 0) {
        exhausted = true;
        return false;
    }
    if (t.is_ret()) {
        return idx == tr.events.size() && tr.result.has_value() &&
               *tr.result == t.ret_value();
    }
    if (t.is_tau()) {
        return is_trace_go(sig, t.step(), tr, idx, fuel - 1, exhausted);
    }
    const Effect& e = t.effect();
    if (!sig.is_visible(e.kind)) {
        auto responses = sig.enumerate_responses(e);
        if (!responses) {
            throw std::logic_error("is_trace: internal choice with non-enumerable domain");
        }
        for (const Value& x : *responses) {
            if (is_trace_go(sig, t.apply(x), tr, idx, fuel - 1, exhausted)) return true;
        }
        return false;
    }
    if (idx == tr.events.size()) return false;  // result demanded but more events required
    const TraceEvent& ev = tr.events[idx];
    if (!(ev.effect == e)) return false;
    if (!sig.response_in_domain(e, ev.response)) return false;
    return is_trace_go(sig, t.apply(ev.response), tr, idx + 1, fuel - 1, exhausted);
}

}  // namespace detail

// Does t admit the observation tr within `fuel` node unfoldings per path?
template <typename R>
TraceCheck is_trace(const EffectSig& sig, const ITree<R>& t, const Trace<R>& tr,
                    std::size_t fuel) {
    TraceCheck out;
    out.accepted = detail::is_trace_go(sig, t, tr, 0, fuel, out.fuel_exhausted);
    if (out.accepted) out.fuel_exhausted = false;
    return out;
}

template <typename R>
TraceCheck is_trace(const EffectSig& sig, const ITree<R>& t, std::vector<TraceEvent> events,
                    std::optional<R> result, std::size_t fuel) {
    return is_trace(sig, t, Trace<R>{std::move(events), std::move(result)}, fuel);
}

struct EnumerateOptions {
    std::size_t max_visible = 4;
    // Unfoldings per path; generous so loops with interleaved Taus are fully
    // explored up to max_visible before the cutoff triggers.
    std::size_t max_steps = 4096;
    // Fallback for visible effects whose domain is not enumerable under the
    // registry; absence makes such effects an error.
    std::function<std::vector<Value>(const Effect&)> sampler;
};

template <typename R>
struct EnumerateResult {
    std::vector<Trace<R>> traces;
    // Some path was cut off by max_steps before reaching max_visible events;
    // the set may be missing extensions of the affected prefixes.
    bool step_budget_hit = false;
};

namespace detail {

template <typename R>
void enumerate_go(const EffectSig& sig, const ITree<R>& t, const EnumerateOptions& opts,
                  std::vector<TraceEvent>& prefix, std::size_t visible_left,
                  std::size_t steps_left, EnumerateResult<R>& out) {
    if (steps_left == 0) {
        out.traces.push_back(Trace<R>{prefix, std::nullopt});
        out.step_budget_hit = true;
        return;
    }
    if (t.is_ret()) {
        out.traces.push_back(Trace<R>{prefix, t.ret_value()});
        return;
    }
    if (t.is_tau()) {
        enumerate_go(sig, t.step(), opts, prefix, visible_left, steps_left - 1, out);
        return;
    }
    const Effect& e = t.effect();
    if (!sig.is_visible(e.kind)) {
        auto responses = sig.enumerate_responses(e);
        if (!responses) {
            throw std::logic_error("enumerate_traces: internal choice with non-enumerable domain");
        }
        if (responses->empty()) {
            out.traces.push_back(Trace<R>{prefix, std::nullopt});  // dead end
            return;
        }
        for (const Value& x : *responses) {
            enumerate_go(sig, t.apply(x), opts, prefix, visible_left, steps_left - 1, out);
        }
        return;
    }
    out.traces.push_back(Trace<R>{prefix, std::nullopt});
    if (visible_left == 0) return;
    std::vector<Value> responses;
    if (auto dom = sig.enumerate_responses(e)) {
        responses = std::move(*dom);
    } else if (opts.sampler) {
        responses = opts.sampler(e);
    } else {
        throw std::runtime_error("enumerate_traces: effect " + show_effect(e) +
                                 " has a non-enumerable response domain and no sampler given");
    }
    for (const Value& x : responses) {
        prefix.push_back(TraceEvent{e, x});
        enumerate_go(sig, t.apply(x), opts, prefix, visible_left - 1, steps_left - 1, out);
        prefix.pop_back();
    }
}

}  // namespace detail

// All traces of t with at most opts.max_visible events. Internal choices are
// branched over but never recorded. A trace carries a result exactly when the
// walk reached Ret at that point; event-prefixes that continue are recorded
// once without a result.
template <typename R>
EnumerateResult<R> enumerate_traces(const EffectSig& sig, const ITree<R>& t,
                                    const EnumerateOptions& opts = {}) {
    EnumerateResult<R> out;
    std::vector<TraceEvent> prefix;
    detail::enumerate_go(sig, t, opts, prefix, opts.max_visible, opts.max_steps, out);
    std::sort(out.traces.begin(), out.traces.end());
    out.traces.erase(std::unique(out.traces.begin(), out.traces.end()), out.traces.end());
    return out;
}

enum class Eutt { Equivalent, Distinct, Unknown };

namespace detail {

template <typename R>
Eutt eutt_go(const EffectSig& sig, ITree<R> t, ITree<R> u, std::size_t& fuel) {
    // Strip Taus from both sides, watching for physical coincidence.
    for (;;) {
        if (t.same_node(u)) return Eutt::Equivalent;
        if (t.is_tau()) {
            if (fuel == 0) return Eutt::Unknown;
            --fuel;
            t = t.step();
            continue;
        }
        if (u.is_tau()) {
            if (fuel == 0) return Eutt::Unknown;
            --fuel;
            u = u.step();
            continue;
        }
        break;
    }
    if (t.is_ret() && u.is_ret()) {
        return t.ret_value() == u.ret_value() ? Eutt::Equivalent : Eutt::Distinct;
    }
    if (t.is_vis() && u.is_vis()) {
        if (!(t.effect() == u.effect())) return Eutt::Distinct;
        auto responses = sig.enumerate_responses(t.effect());
        if (!responses) return Eutt::Unknown;
        bool unknown = false;
        for (const Value& x : *responses) {
            if (fuel == 0) return Eutt::Unknown;
            --fuel;
            switch (eutt_go(sig, t.apply(x), u.apply(x), fuel)) {
                case Eutt::Distinct: return Eutt::Distinct;
                case Eutt::Unknown: unknown = true; break;
                case Eutt::Equivalent: break;
            }
        }
        return unknown ? Eutt::Unknown : Eutt::Equivalent;
    }
    return Eutt::Distinct;  // Ret on one side, Vis on the other
}

}  // namespace detail

// Bounded equivalence up to Tau (weak bisimulation with a step budget).
// Distinct is definite; Equivalent means the bisimulation closed within
// fuel; Unknown means the budget ran out first.
template <typename R>
Eutt eutt_bounded(const EffectSig& sig, const ITree<R>& t, const ITree<R>& u,
                  std::size_t fuel = 1000) {
    std::size_t budget = fuel;
    return detail::eutt_go(sig, t, u, budget);
}

// Observable-trace inclusion: every trace of t up to `depth` visible events
// is a trace of u. Traces without a result only assert reachability of the
// event prefix, so they match any annotation on the other side.
template <typename R>
bool refines_bounded(const EffectSig& sig, const ITree<R>& t, const ITree<R>& u,
                     std::size_t depth, std::size_t max_steps = 4096) {
    EnumerateOptions opts;
    opts.max_visible = depth;
    opts.max_steps = max_steps;
    auto lhs = enumerate_traces(sig, t, opts);
    auto rhs = enumerate_traces(sig, u, opts);
    for (const auto& tr : lhs.traces) {
        if (tr.result.has_value()) {
            if (!std::binary_search(rhs.traces.begin(), rhs.traces.end(), tr)) return false;
        } else {
            bool found = std::any_of(rhs.traces.begin(), rhs.traces.end(), [&](const auto& o) {
                return o.events == tr.events;
            });
            if (!found) return false;
        }
    }
    return true;
}

}  // namespace swapnet
