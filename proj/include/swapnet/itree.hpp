#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "swapnet/effects.hpp"
#include "swapnet/value.hpp"

namespace swapnet {

// Interaction tree over result type R. A tree is one of
//   Ret(v)    — the computation halts with v,
//   Tau(th)   — a silent step; th() is the rest of the computation,
//   Vis(e, k) — visible effect e; k maps an environment response to the rest.
// Tau children and Vis continuations are produced on demand, so infinite
// trees (server loops, spin) are ordinary values: constructing a node never
// recurses, and unfolding any single node terminates.
template <typename R>
class ITree {
  public:
    struct RetNode {
        R value;
    };
    struct TauNode {
        std::function<ITree()> next;
    };
    struct VisNode {
        Effect effect;
        std::function<ITree(const Value&)> cont;
    };
    using Node = std::variant<RetNode, TauNode, VisNode>;

    // Default-constructed trees diverge silently (same behavior as spin).
    ITree() : node_(std::make_shared<Node>(TauNode{[] { return ITree(); }})) {}

    static ITree ret(R v) { return ITree(Node{RetNode{std::move(v)}}); }

    static ITree tau(ITree t) {
        return ITree(Node{TauNode{[t] { return t; }}});
    }

    // Tau whose child is computed lazily; the guard for recursive definitions.
    static ITree defer(std::function<ITree()> f) {
        return ITree(Node{TauNode{std::move(f)}});
    }

    static ITree vis(const EffectSig& sig, Effect e, std::function<ITree(const Value&)> k) {
        sig.require_registered(e.kind);
        return ITree(Node{VisNode{std::move(e), std::move(k)}});
    }

    bool is_ret() const { return std::holds_alternative<RetNode>(*node_); }
    bool is_tau() const { return std::holds_alternative<TauNode>(*node_); }
    bool is_vis() const { return std::holds_alternative<VisNode>(*node_); }

    const R& ret_value() const { return std::get<RetNode>(*node_).value; }
    ITree step() const { return std::get<TauNode>(*node_).next(); }
    const Effect& effect() const { return std::get<VisNode>(*node_).effect; }
    ITree apply(const Value& response) const { return std::get<VisNode>(*node_).cont(response); }

    // Physical identity; used by bounded equivalence as a reflexivity shortcut.
    bool same_node(const ITree& other) const { return node_ == other.node_; }

  private:
    explicit ITree(Node n) : node_(std::make_shared<Node>(std::move(n))) {}
    std::shared_ptr<const Node> node_;
};

namespace detail {

// Registry that accepts every kind; used when rebuilding nodes whose effects
// were already validated at their original construction (bind does this).
inline const EffectSig& unchecked_sig() {
    static const EffectSig sig = [] {
        EffectSig s;
        for (int i = 0; i < static_cast<int>(EffectKind::kCount); ++i) {
            s.register_kind(static_cast<EffectKind>(i), true,
                            [](const Effect&, const Value&) { return true; },
                            [](const Effect&) { return std::optional<std::vector<Value>>{}; });
        }
        return s;
    }();
    return sig;
}

}  // namespace detail

template <typename R>
ITree<R> ret(R v) {
    return ITree<R>::ret(std::move(v));
}

template <typename R>
ITree<R> tau(ITree<R> t) {
    return ITree<R>::tau(std::move(t));
}

// Divergence: Tau forever. Its only trace is the empty one, with no result.
template <typename R>
ITree<R> spin() {
    return ITree<R>::defer([] { return spin<R>(); });
}

// A subtree with no behaviors (effect with empty response domain). Used for
// branches the specification rules out, e.g. re-accepting a taken id.
template <typename R>
ITree<R> halt() {
    return ITree<R>::vis(detail::unchecked_sig(), halt_effect(),
                         [](const Value&) { return halt<R>(); });
}

// Sequential composition. Binding Ret applies k immediately; Tau and Vis
// nodes are rebuilt lazily so composition is O(1) per unfolding.
template <typename A, typename F,
          typename TB = std::invoke_result_t<F, const A&>>
TB bind(ITree<A> t, F k) {
    if (t.is_ret()) return k(t.ret_value());
    if (t.is_tau()) {
        return TB::defer([t, k] { return bind(t.step(), k); });
    }
    Effect e = t.effect();
    return TB::vis(detail::unchecked_sig(), std::move(e),
                   [t, k](const Value& x) { return bind(t.apply(x), k); });
}

// Internal binary choice between two alternatives of the same type.
template <typename R>
ITree<R> or_(const EffectSig& sig, ITree<R> t1, ITree<R> t2) {
    return ITree<R>::vis(sig, or_effect(), [t1, t2](const Value& i) {
        return as_int(i) == 0 ? t1 : t2;
    });
}

// Internal choice of one item; the branch index is never observable.
template <typename T, typename F,
          typename TB = std::invoke_result_t<F, const T&>>
TB choose_with(const EffectSig& sig, std::vector<T> items, F body) {
    if (items.empty()) throw std::invalid_argument("choose: empty alternatives");
    auto shared = std::make_shared<std::vector<T>>(std::move(items));
    return TB::vis(sig, choose_effect(shared->size()), [shared, body](const Value& i) {
        return body((*shared)[static_cast<std::size_t>(as_int(i))]);
    });
}

inline ITree<Value> choose(const EffectSig& sig, std::vector<Value> items) {
    return choose_with(sig, std::move(items),
                       [](const Value& v) { return ITree<Value>::ret(v); });
}

// Infinite repetition of body, with a Tau between iterations so every
// bounded walk makes progress through the loop head.
template <typename A>
ITree<Unit> forever(ITree<A> body) {
    return bind(body, [body](const A&) {
        return ITree<Unit>::defer([body] { return forever(body); });
    });
}

// State-threading loop: run step(s), continue on (true, s'), stop on false.
template <typename S, typename F>
ITree<Unit> repeat_loop(S state, F step) {
    return bind(step(state), [step](const std::pair<bool, S>& r) {
        if (!r.first) return ITree<Unit>::ret(Unit{});
        S next = r.second;
        return ITree<Unit>::defer([next, step] { return repeat_loop(next, step); });
    });
}

}  // namespace swapnet
