#include "swapnet/effects.hpp"

#include <algorithm>
#include <sstream>

namespace swapnet {

Bytes bytes_of_string(const std::string& s) {
    return Bytes(s.begin(), s.end());
}

std::string show_bytes(const Bytes& b) {
    static const char* hexd = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2 + 2);
    out.push_back('"');
    for (Byte c : b) {
        if (c >= 0x20 && c < 0x7f) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('\\');
            out.push_back(hexd[c >> 4]);
            out.push_back(hexd[c & 0xf]);
        }
    }
    out.push_back('"');
    return out;
}

std::string show_value(const Value& v) {
    if (is_unit(v)) return "()";
    if (is_int(v)) return std::to_string(as_int(v));
    if (is_bytes(v)) return show_bytes(as_bytes(v));
    if (is_no_conn(v)) return "none";
    return "failure";
}

const char* effect_kind_name(EffectKind k) {
    switch (k) {
        case EffectKind::Or: return "or";
        case EffectKind::Choose: return "choose";
        case EffectKind::Halt: return "halt";
        case EffectKind::ObsConnect: return "obs_connect";
        case EffectKind::ObsMsgToServer: return "obs_msg_to_server";
        case EffectKind::ObsMsgFromServer: return "obs_msg_from_server";
        case EffectKind::Accept: return "accept";
        case EffectKind::RecvBytes: return "recv_bytes";
        case EffectKind::SendBytes: return "send_bytes";
        case EffectKind::Input: return "input";
        case EffectKind::Output: return "output";
        default: return "?";
    }
}

std::string show_effect(const Effect& e) {
    std::ostringstream os;
    os << effect_kind_name(e.kind);
    if (!e.args.empty()) {
        os << '(';
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            if (i) os << ',';
            os << show_value(e.args[i]);
        }
        os << ')';
    }
    return os.str();
}

void EffectSig::register_kind(
    EffectKind kind, bool visible,
    std::function<bool(const Effect&, const Value&)> contains,
    std::function<std::optional<std::vector<Value>>(const Effect&)> enumerate) {
    auto& k = kinds_[static_cast<int>(kind)];
    k.registered = true;
    k.visible = visible;
    k.contains = std::move(contains);
    k.enumerate = std::move(enumerate);
}

const EffectSig::KindInfo& EffectSig::info(EffectKind kind) const {
    return kinds_[static_cast<int>(kind)];
}

bool EffectSig::is_registered(EffectKind kind) const {
    return info(kind).registered;
}

bool EffectSig::is_visible(EffectKind kind) const {
    require_registered(kind);
    return info(kind).visible;
}

bool EffectSig::response_in_domain(const Effect& e, const Value& v) const {
    require_registered(e.kind);
    return info(e.kind).contains(e, v);
}

std::optional<std::vector<Value>> EffectSig::enumerate_responses(const Effect& e) const {
    require_registered(e.kind);
    return info(e.kind).enumerate(e);
}

void EffectSig::require_registered(EffectKind kind) const {
    if (!info(kind).registered) {
        throw std::invalid_argument(std::string("effect kind not registered: ") +
                                    effect_kind_name(kind));
    }
}

namespace {

std::vector<Value> index_range(std::int64_t n) {
    std::vector<Value> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) out.push_back(int_value(i));
    return out;
}

// All byte strings over `alphabet` with length in [min_len, max_len].
std::vector<Value> byte_strings(const std::vector<Byte>& alphabet, std::size_t min_len,
                                std::size_t max_len) {
    std::vector<Value> out;
    std::vector<Bytes> layer = {Bytes{}};
    for (std::size_t len = 0; len <= max_len; ++len) {
        if (len >= min_len) {
            for (const auto& b : layer) out.push_back(bytes_value(b));
        }
        if (len == max_len) break;
        std::vector<Bytes> next;
        next.reserve(layer.size() * alphabet.size());
        for (const auto& b : layer) {
            for (Byte c : alphabet) {
                Bytes ext = b;
                ext.push_back(c);
                next.push_back(std::move(ext));
            }
        }
        layer = std::move(next);
    }
    return out;
}

}  // namespace

EffectSig swap_effect_sig(const EnumConfig& cfg) {
    EffectSig sig;

    sig.register_kind(
        EffectKind::Or, /*visible=*/false,
        [](const Effect&, const Value& v) { return is_int(v) && (as_int(v) == 0 || as_int(v) == 1); },
        [](const Effect&) { return std::optional(index_range(2)); });

    sig.register_kind(
        EffectKind::Choose, /*visible=*/false,
        [](const Effect& e, const Value& v) {
            return is_int(v) && as_int(v) >= 0 && as_int(v) < as_int(e.args.at(0));
        },
        [](const Effect& e) { return std::optional(index_range(as_int(e.args.at(0)))); });

    sig.register_kind(
        EffectKind::Halt, /*visible=*/false,
        [](const Effect&, const Value&) { return false; },
        [](const Effect&) { return std::optional(std::vector<Value>{}); });

    sig.register_kind(
        EffectKind::ObsConnect, /*visible=*/true,
        [](const Effect& e, const Value& v) {
            if (!is_int(v) || as_int(v) < 0) return false;
            return std::none_of(e.args.begin(), e.args.end(),
                                [&](const Value& t) { return t == v; });
        },
        [cfg](const Effect& e) {
            std::vector<Value> out;
            for (ConnectionId c : cfg.conn_ids) {
                Value v = int_value(c);
                if (std::none_of(e.args.begin(), e.args.end(),
                                 [&](const Value& t) { return t == v; }))
                    out.push_back(v);
            }
            return std::optional(out);
        });

    sig.register_kind(
        EffectKind::ObsMsgToServer, /*visible=*/true,
        [cfg](const Effect&, const Value& v) {
            return is_bytes(v) && as_bytes(v).size() == cfg.message_size;
        },
        [cfg](const Effect&) {
            return std::optional(byte_strings(cfg.alphabet, cfg.message_size, cfg.message_size));
        });

    sig.register_kind(
        EffectKind::ObsMsgFromServer, /*visible=*/true,
        [](const Effect&, const Value& v) { return is_unit(v); },
        [](const Effect&) { return std::optional(std::vector<Value>{unit_value()}); });

    sig.register_kind(
        EffectKind::Accept, /*visible=*/true,
        [](const Effect&, const Value& v) { return is_no_conn(v) || (is_int(v) && as_int(v) >= 0); },
        [cfg](const Effect&) {
            std::vector<Value> out = {Value{NoConn{}}};
            for (ConnectionId c : cfg.conn_ids) out.push_back(int_value(c));
            return std::optional(out);
        });

    sig.register_kind(
        EffectKind::RecvBytes, /*visible=*/true,
        [](const Effect& e, const Value& v) {
            if (is_failure(v)) return true;
            return is_bytes(v) &&
                   as_bytes(v).size() <= static_cast<std::size_t>(as_int(e.args.at(1)));
        },
        [cfg](const Effect& e) {
            std::vector<Value> out = {Value{Failure{}}};
            auto strs = byte_strings(cfg.alphabet, 0, static_cast<std::size_t>(as_int(e.args.at(1))));
            out.insert(out.end(), strs.begin(), strs.end());
            return std::optional(out);
        });

    sig.register_kind(
        EffectKind::SendBytes, /*visible=*/true,
        [](const Effect& e, const Value& v) {
            if (is_failure(v)) return true;
            return is_int(v) && as_int(v) >= 0 &&
                   as_int(v) <= static_cast<std::int64_t>(as_bytes(e.args.at(1)).size());
        },
        [](const Effect& e) {
            std::vector<Value> out = {Value{Failure{}}};
            auto r = index_range(static_cast<std::int64_t>(as_bytes(e.args.at(1)).size()) + 1);
            out.insert(out.end(), r.begin(), r.end());
            return std::optional(out);
        });

    sig.register_kind(
        EffectKind::Input, /*visible=*/true,
        [](const Effect&, const Value& v) { return is_int(v); },
        [](const Effect&) { return std::optional(index_range(4)); });

    sig.register_kind(
        EffectKind::Output, /*visible=*/true,
        [](const Effect&, const Value& v) { return is_unit(v); },
        [](const Effect&) { return std::optional(std::vector<Value>{unit_value()}); });

    return sig;
}

Effect or_effect() { return Effect{EffectKind::Or, {}}; }

Effect choose_effect(std::size_t n) {
    return Effect{EffectKind::Choose, {int_value(static_cast<std::int64_t>(n))}};
}

Effect halt_effect() { return Effect{EffectKind::Halt, {}}; }

Effect obs_connect_effect(const std::vector<ConnectionId>& taken) {
    Effect e{EffectKind::ObsConnect, {}};
    for (ConnectionId c : taken) e.args.push_back(int_value(c));
    return e;
}

Effect obs_msg_to_server_effect(ConnectionId c) {
    return Effect{EffectKind::ObsMsgToServer, {int_value(c)}};
}

Effect obs_msg_from_server_effect(ConnectionId c, const Bytes& msg) {
    return Effect{EffectKind::ObsMsgFromServer, {int_value(c), bytes_value(msg)}};
}

Effect accept_effect(std::int64_t endpoint) {
    return Effect{EffectKind::Accept, {int_value(endpoint)}};
}

Effect recv_bytes_effect(ConnectionId c, std::size_t maxlen) {
    return Effect{EffectKind::RecvBytes,
                  {int_value(c), int_value(static_cast<std::int64_t>(maxlen))}};
}

Effect send_bytes_effect(ConnectionId c, const Bytes& payload) {
    return Effect{EffectKind::SendBytes, {int_value(c), bytes_value(payload)}};
}

Effect input_effect() { return Effect{EffectKind::Input, {}}; }

Effect output_effect(const Value& x) { return Effect{EffectKind::Output, {x}}; }

}  // namespace swapnet
