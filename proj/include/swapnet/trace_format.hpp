#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "swapnet/network_model.hpp"
#include "swapnet/value.hpp"

namespace swapnet {

// On-disk trace format, one event per line:
//   C <conn-id>            new connection
//   S <conn-id> <hex2>     byte to the server
//   F <conn-id> <hex2>     byte from the server
// '#' starts a comment; blank lines are ignored.

std::string render_trace_file(const NetworkTrace& tr);

struct TraceParseError {
    std::size_t line = 0;
    std::string message;
};

// Returns the trace, or sets `err` and returns nullopt.
std::optional<NetworkTrace> parse_trace_file(std::istream& in, TraceParseError* err = nullptr);
std::optional<NetworkTrace> parse_trace_text(const std::string& text,
                                             TraceParseError* err = nullptr);

// Oracle script files replay one response per effect the model issues
// (internal choices included). Same conventions as trace files: one entry
// per line, '#' comments, blank lines ignored.
//   i <n>      integer (or/choose index, accept id, send count)
//   b <hex..>  byte string (recv data; "b" alone is the empty read)
//   u          unit
//   n          no connection (accept)
//   f          failure
std::string render_oracle_script(const std::vector<Value>& script);
std::optional<std::vector<Value>> parse_oracle_script(const std::string& text,
                                                      TraceParseError* err = nullptr);

}  // namespace swapnet
