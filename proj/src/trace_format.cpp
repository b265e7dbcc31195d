#include "swapnet/trace_format.hpp"

#include <istream>
#include <sstream>

namespace swapnet {

std::string render_trace_file(const NetworkTrace& tr) {
    std::string out;
    for (const NetworkEvent& ev : tr) {
        out += show_network_event(ev);
        out += '\n';
    }
    return out;
}

namespace {

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

bool fail(TraceParseError* err, std::size_t line, const std::string& msg) {
    if (err) *err = TraceParseError{line, msg};
    return false;
}

bool parse_line(const std::string& raw, std::size_t lineno, NetworkTrace& out,
                TraceParseError* err) {
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream is(line);
    std::string tag;
    if (!(is >> tag)) return true;  // blank or comment-only
    if (tag != "C" && tag != "S" && tag != "F") {
        return fail(err, lineno, "unknown event tag '" + tag + "'");
    }
    long long conn = -1;
    if (!(is >> conn) || conn < 0) {
        return fail(err, lineno, "missing or invalid connection id");
    }
    NetworkEvent ev;
    ev.conn = conn;
    if (tag == "C") {
        ev.type = NetEventType::NewConnection;
    } else {
        ev.type = tag == "S" ? NetEventType::ToServer : NetEventType::FromServer;
        std::string hex;
        if (!(is >> hex) || hex.size() != 2 || hex_digit(hex[0]) < 0 || hex_digit(hex[1]) < 0) {
            return fail(err, lineno, "missing or invalid byte (expected two hex digits)");
        }
        ev.byte = static_cast<Byte>(hex_digit(hex[0]) * 16 + hex_digit(hex[1]));
    }
    std::string trailing;
    if (is >> trailing) return fail(err, lineno, "trailing junk '" + trailing + "'");
    out.push_back(ev);
    return true;
}

}  // namespace

std::optional<NetworkTrace> parse_trace_file(std::istream& in, TraceParseError* err) {
    NetworkTrace out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!parse_line(line, lineno, out, err)) return std::nullopt;
    }
    return out;
}

std::optional<NetworkTrace> parse_trace_text(const std::string& text, TraceParseError* err) {
    std::istringstream is(text);
    return parse_trace_file(is, err);
}

std::string render_oracle_script(const std::vector<Value>& script) {
    static const char* hexd = "0123456789abcdef";
    std::string out;
    for (const Value& v : script) {
        if (is_int(v)) {
            out += "i " + std::to_string(as_int(v));
        } else if (is_bytes(v)) {
            out += 'b';
            if (!as_bytes(v).empty()) out += ' ';
            for (Byte b : as_bytes(v)) {
                out += hexd[b >> 4];
                out += hexd[b & 0xf];
            }
        } else if (is_unit(v)) {
            out += 'u';
        } else if (is_no_conn(v)) {
            out += 'n';
        } else {
            out += 'f';
        }
        out += '\n';
    }
    return out;
}

std::optional<std::vector<Value>> parse_oracle_script(const std::string& text,
                                                      TraceParseError* err) {
    std::vector<Value> out;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        std::istringstream is(raw);
        std::string tag;
        if (!(is >> tag)) continue;
        if (tag == "i") {
            long long n = 0;
            if (!(is >> n)) {
                fail(err, lineno, "missing integer");
                return std::nullopt;
            }
            out.push_back(int_value(n));
        } else if (tag == "b") {
            std::string hex;
            is >> hex;  // absent means the empty byte string
            if (hex.size() % 2 != 0) {
                fail(err, lineno, "odd hex length");
                return std::nullopt;
            }
            Bytes bytes;
            for (std::size_t k = 0; k < hex.size(); k += 2) {
                int hi = hex_digit(hex[k]);
                int lo = hex_digit(hex[k + 1]);
                if (hi < 0 || lo < 0) {
                    fail(err, lineno, "invalid hex byte");
                    return std::nullopt;
                }
                bytes.push_back(static_cast<Byte>(hi * 16 + lo));
            }
            out.push_back(bytes_value(std::move(bytes)));
        } else if (tag == "u") {
            out.push_back(unit_value());
        } else if (tag == "n") {
            out.push_back(Value{NoConn{}});
        } else if (tag == "f") {
            out.push_back(Value{Failure{}});
        } else {
            fail(err, lineno, "unknown response tag '" + tag + "'");
            return std::nullopt;
        }
        std::string trailing;
        if (is >> trailing) {
            fail(err, lineno, "trailing junk '" + trailing + "'");
            return std::nullopt;
        }
    }
    return out;
}

}  // namespace swapnet
