#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "swapnet/value.hpp"

namespace swapnet {

// Effect kinds used across the swap stack. Or/Choose/Halt are internal
// nondeterminism: trace enumeration branches on them but never records them.
enum class EffectKind : int {
    Or = 0,
    Choose,
    Halt,
    ObsConnect,
    ObsMsgToServer,
    ObsMsgFromServer,
    Accept,
    RecvBytes,
    SendBytes,
    Input,
    Output,
    kCount,
};

const char* effect_kind_name(EffectKind k);

// An effect instance: a kind plus its request payload. Payload conventions
// per kind are documented where the kind is registered.
struct Effect {
    EffectKind kind{EffectKind::Halt};
    std::vector<Value> args;

    friend bool operator==(const Effect& a, const Effect& b) {
        return a.kind == b.kind && a.args == b.args;
    }
    friend bool operator<(const Effect& a, const Effect& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.args < b.args;
    }
};

std::string show_effect(const Effect& e);

// Registry of effect kinds. Each registered kind declares whether it is
// visible in traces, the membership test for its response domain, and an
// enumerator for that domain (absent when the domain is not finitely
// enumerable under the registry's configuration).
class EffectSig {
  public:
    struct KindInfo {
        bool registered = false;
        bool visible = true;
        std::function<bool(const Effect&, const Value&)> contains;
        std::function<std::optional<std::vector<Value>>(const Effect&)> enumerate;
    };

    void register_kind(EffectKind kind, bool visible,
                       std::function<bool(const Effect&, const Value&)> contains,
                       std::function<std::optional<std::vector<Value>>(const Effect&)> enumerate);

    bool is_registered(EffectKind kind) const;
    bool is_visible(EffectKind kind) const;
    bool response_in_domain(const Effect& e, const Value& v) const;
    // nullopt: the domain is infinite (or deliberately not enumerated).
    std::optional<std::vector<Value>> enumerate_responses(const Effect& e) const;

    void require_registered(EffectKind kind) const;

  private:
    const KindInfo& info(EffectKind kind) const;
    KindInfo kinds_[static_cast<int>(EffectKind::kCount)] = {};
};

// Bounds used when enumerating response domains exhaustively.
struct EnumConfig {
    std::vector<Byte> alphabet = {'a', 'b', 'c', 'd'};
    std::vector<ConnectionId> conn_ids = {1, 2, 3};
    std::size_t message_size = 3;
};

// Registry for the whole swap stack (spec effects, impl effects, internal
// choice, and the Input/Output pair used by small examples). Domains:
//   Or               args []              -> {0,1}, invisible
//   Choose           args [n]             -> {0..n-1}, invisible
//   Halt             args []              -> {}, invisible
//   ObsConnect       args [taken ids...]  -> any id not in args; enumerates pool \ args
//   ObsMsgToServer   args [c]             -> bytes of length message_size
//   ObsMsgFromServer args [c, msg]        -> {unit}
//   Accept           args [endpoint]      -> {NoConn} + ids (enumerates pool)
//   RecvBytes        args [c, maxlen]     -> {Failure} + bytes of length 0..maxlen
//   SendBytes        args [c, payload]    -> {Failure} + {0..len(payload)}
//   Input            args []              -> small ints (enumerates 0..3)
//   Output           args [x]             -> {unit}
EffectSig swap_effect_sig(const EnumConfig& cfg);

// Effect builders.
Effect or_effect();
Effect choose_effect(std::size_t n);
Effect halt_effect();
Effect obs_connect_effect(const std::vector<ConnectionId>& taken);
Effect obs_msg_to_server_effect(ConnectionId c);
Effect obs_msg_from_server_effect(ConnectionId c, const Bytes& msg);
Effect accept_effect(std::int64_t endpoint);
Effect recv_bytes_effect(ConnectionId c, std::size_t maxlen);
Effect send_bytes_effect(ConnectionId c, const Bytes& payload);
Effect input_effect();
Effect output_effect(const Value& x);

}  // namespace swapnet
