#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace swapnet {

using Byte = std::uint8_t;
using Bytes = std::vector<Byte>;
using ConnectionId = std::int64_t;

// Unit response/result, comparable so it can live in traces and sets.
struct Unit {
    friend bool operator==(Unit, Unit) { return true; }
    friend bool operator<(Unit, Unit) { return false; }
};

// Response of Accept when no pending connection was taken.
struct NoConn {
    friend bool operator==(NoConn, NoConn) { return true; }
    friend bool operator<(NoConn, NoConn) { return false; }
};

// Response of RecvBytes/SendBytes when the call failed outright.
struct Failure {
    friend bool operator==(Failure, Failure) { return true; }
    friend bool operator<(Failure, Failure) { return false; }
};

// Dynamically typed environment response: enumeration and co-simulation
// work over these, so effects of every interface share one trace type.
using Value = std::variant<Unit, std::int64_t, Bytes, NoConn, Failure>;

inline Value unit_value() { return Value{Unit{}}; }
inline Value int_value(std::int64_t n) { return Value{n}; }
inline Value bytes_value(Bytes b) { return Value{std::move(b)}; }

inline bool is_unit(const Value& v) { return std::holds_alternative<Unit>(v); }
inline bool is_int(const Value& v) { return std::holds_alternative<std::int64_t>(v); }
inline bool is_bytes(const Value& v) { return std::holds_alternative<Bytes>(v); }
inline bool is_no_conn(const Value& v) { return std::holds_alternative<NoConn>(v); }
inline bool is_failure(const Value& v) { return std::holds_alternative<Failure>(v); }

inline std::int64_t as_int(const Value& v) { return std::get<std::int64_t>(v); }
inline const Bytes& as_bytes(const Value& v) { return std::get<Bytes>(v); }

Bytes bytes_of_string(const std::string& s);
std::string show_bytes(const Bytes& b);
std::string show_value(const Value& v);

}  // namespace swapnet
