#include "swapnet/network_model.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace swapnet {

NetworkEvent new_connection(ConnectionId c) {
    return NetworkEvent{NetEventType::NewConnection, c, 0};
}

NetworkEvent to_server(ConnectionId c, Byte b) {
    return NetworkEvent{NetEventType::ToServer, c, b};
}

NetworkEvent from_server(ConnectionId c, Byte b) {
    return NetworkEvent{NetEventType::FromServer, c, b};
}

std::string show_network_event(const NetworkEvent& ev) {
    static const char* hexd = "0123456789abcdef";
    std::string out;
    switch (ev.type) {
        case NetEventType::NewConnection: out = "C "; break;
        case NetEventType::ToServer: out = "S "; break;
        case NetEventType::FromServer: out = "F "; break;
    }
    out += std::to_string(ev.conn);
    if (ev.type != NetEventType::NewConnection) {
        out += ' ';
        out += hexd[ev.byte >> 4];
        out += hexd[ev.byte & 0xf];
    }
    return out;
}

std::string show_network_trace(const NetworkTrace& tr) {
    std::ostringstream os;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        if (i) os << "; ";
        os << show_network_event(tr[i]);
    }
    return os.str();
}

ConnectionStatus NetworkState::status(ConnectionId c) const {
    auto it = conns.find(c);
    return it == conns.end() ? ConnectionStatus::Closed : it->second.status;
}

const ConnectionNetState* NetworkState::find(ConnectionId c) const {
    auto it = conns.find(c);
    return it == conns.end() ? nullptr : &it->second;
}

std::string NetworkState::canonical_key() const {
    std::ostringstream os;
    for (const auto& [id, cs] : conns) {
        os << id << ':' << static_cast<int>(cs.status) << ':';
        for (Byte b : cs.to_server) os << static_cast<int>(b) << ',';
        os << ':';
        for (Byte b : cs.from_server) os << static_cast<int>(b) << ',';
        os << ';';
    }
    return os.str();
}

std::optional<NetworkState> server_transition(const NetworkEvent& ev, const NetworkState& ns) {
    NetworkState out = ns;
    auto& cs = out.conns[ev.conn];
    switch (ev.type) {
        case NetEventType::NewConnection:
            if (cs.status != ConnectionStatus::Pending) return std::nullopt;
            cs.status = ConnectionStatus::Accepted;
            return out;
        case NetEventType::FromServer:
            if (cs.status != ConnectionStatus::Accepted) return std::nullopt;
            cs.from_server.push_back(ev.byte);
            return out;
        case NetEventType::ToServer:
            // Receives are allowed while the connection is still pending.
            if (cs.status == ConnectionStatus::Closed) return std::nullopt;
            if (cs.to_server.empty() || cs.to_server.front() != ev.byte) return std::nullopt;
            cs.to_server.pop_front();
            return out;
    }
    return std::nullopt;
}

std::optional<NetworkState> client_transition(const NetworkEvent& ev, const NetworkState& ns) {
    NetworkState out = ns;
    auto& cs = out.conns[ev.conn];
    switch (ev.type) {
        case NetEventType::NewConnection:
            if (cs.status != ConnectionStatus::Closed) return std::nullopt;
            cs.status = ConnectionStatus::Pending;
            return out;
        case NetEventType::ToServer:
            if (cs.status == ConnectionStatus::Closed) return std::nullopt;
            cs.to_server.push_back(ev.byte);
            return out;
        case NetEventType::FromServer:
            if (cs.from_server.empty() || cs.from_server.front() != ev.byte) return std::nullopt;
            cs.from_server.pop_front();
            return out;
    }
    return std::nullopt;
}

namespace {

struct ReorderSearch {
    const NetworkTrace& ts;
    const NetworkTrace& tc;
    std::uint64_t budget;
    bool budget_hit = false;
    std::unordered_set<std::string> visited;

    bool go(std::size_t i, std::size_t j, const NetworkState& ns) {
        if (i == ts.size() && j == tc.size()) return true;
        if (budget == 0) {
            budget_hit = true;
            return false;
        }
        --budget;
        std::string key = std::to_string(i) + '|' + std::to_string(j) + '|' + ns.canonical_key();
        if (!visited.insert(std::move(key)).second) return false;
        if (i < ts.size()) {
            if (auto next = server_transition(ts[i], ns)) {
                if (go(i + 1, j, *next)) return true;
            }
        }
        if (j < tc.size()) {
            if (auto next = client_transition(tc[j], ns)) {
                if (go(i, j + 1, *next)) return true;
            }
        }
        return false;
    }
};

bool brute_go(const NetworkTrace& ts, const NetworkTrace& tc, std::size_t i, std::size_t j,
              const NetworkState& ns) {
    if (i == ts.size() && j == tc.size()) return true;
    if (i < ts.size()) {
        if (auto next = server_transition(ts[i], ns)) {
            if (brute_go(ts, tc, i + 1, j, *next)) return true;
        }
    }
    if (j < tc.size()) {
        if (auto next = client_transition(tc[j], ns)) {
            if (brute_go(ts, tc, i, j + 1, *next)) return true;
        }
    }
    return false;
}

}  // namespace

SearchOutcome network_reordered(const NetworkTrace& ts, const NetworkTrace& tc,
                                const NetworkState& ns0, const ReorderOptions& opts) {
    ReorderSearch search{ts, tc, opts.node_budget};
    if (search.go(0, 0, ns0)) return SearchOutcome::Yes;
    return search.budget_hit ? SearchOutcome::BudgetExceeded : SearchOutcome::No;
}

bool brute_force_reordered(const NetworkTrace& ts, const NetworkTrace& tc,
                           const NetworkState& ns0) {
    if (ts.size() + tc.size() > 16) {
        throw std::invalid_argument("brute_force_reordered: traces too long (limit 16 events)");
    }
    return brute_go(ts, tc, 0, 0, ns0);
}

}  // namespace swapnet
