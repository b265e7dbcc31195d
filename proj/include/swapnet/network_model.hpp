#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swapnet/value.hpp"

namespace swapnet {

enum class NetEventType : std::uint8_t { NewConnection, ToServer, FromServer };

struct NetworkEvent {
    NetEventType type{NetEventType::NewConnection};
    ConnectionId conn = 0;
    Byte byte = 0;  // unused for NewConnection

    friend bool operator==(const NetworkEvent& a, const NetworkEvent& b) {
        return a.type == b.type && a.conn == b.conn &&
               (a.type == NetEventType::NewConnection || a.byte == b.byte);
    }
    friend bool operator<(const NetworkEvent& a, const NetworkEvent& b) {
        if (a.type != b.type) return a.type < b.type;
        if (a.conn != b.conn) return a.conn < b.conn;
        Byte ab = a.type == NetEventType::NewConnection ? 0 : a.byte;
        Byte bb = b.type == NetEventType::NewConnection ? 0 : b.byte;
        return ab < bb;
    }
};

using NetworkTrace = std::vector<NetworkEvent>;

NetworkEvent new_connection(ConnectionId c);
NetworkEvent to_server(ConnectionId c, Byte b);
NetworkEvent from_server(ConnectionId c, Byte b);
std::string show_network_event(const NetworkEvent& ev);
std::string show_network_trace(const NetworkTrace& tr);

// Per connection: CLOSED -> PENDING (client opened) -> ACCEPTED (server
// accepted); never back.
enum class ConnectionStatus : std::uint8_t { Closed, Pending, Accepted };

struct ConnectionNetState {
    ConnectionStatus status = ConnectionStatus::Closed;
    std::deque<Byte> to_server;    // sent by client, not yet received by server
    std::deque<Byte> from_server;  // sent by server, not yet received by client

    friend bool operator==(const ConnectionNetState&, const ConnectionNetState&) = default;
};

struct NetworkState {
    // Absent ids are CLOSED with empty queues.
    std::map<ConnectionId, ConnectionNetState> conns;

    ConnectionStatus status(ConnectionId c) const;
    const ConnectionNetState* find(ConnectionId c) const;
    std::string canonical_key() const;

    friend bool operator==(const NetworkState&, const NetworkState&) = default;
};

// Server-side step: accept a pending connection, emit a byte toward the
// client, or consume the head of the inbound queue. Absent result means the
// transition is disabled in ns.
std::optional<NetworkState> server_transition(const NetworkEvent& ev, const NetworkState& ns);

// Client-side step: open a connection, emit a byte toward the server, or
// consume the head of the outbound queue.
std::optional<NetworkState> client_transition(const NetworkEvent& ev, const NetworkState& ns);

enum class SearchOutcome { Yes, No, BudgetExceeded };

struct ReorderOptions {
    std::uint64_t node_budget = 1'000'000;
};

// Is tc one possible client-side observation of the server-side trace ts,
// starting from ns0? Decided by memoized search over interleavings of the
// two traces; leftover in-flight bytes are allowed.
SearchOutcome network_reordered(const NetworkTrace& ts, const NetworkTrace& tc,
                                const NetworkState& ns0, const ReorderOptions& opts = {});

// Exhaustive interleaving enumeration, no memoization. Test oracle for
// network_reordered; refuses inputs with more than 16 events total.
bool brute_force_reordered(const NetworkTrace& ts, const NetworkTrace& tc,
                           const NetworkState& ns0);

}  // namespace swapnet
