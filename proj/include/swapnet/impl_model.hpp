#pragma once

#include <optional>
#include <vector>

#include "swapnet/itree.hpp"
#include "swapnet/itree_check.hpp"
#include "swapnet/network_model.hpp"
#include "swapnet/swap_spec.hpp"

namespace swapnet {

using EndpointId = std::int64_t;

enum class ConnState : std::uint8_t { Recving, Sending, Deleted };

// Per-connection record mirroring the C server's connection structure.
struct Connection {
    ConnectionId id = 0;
    ConnState state = ConnState::Recving;
    Bytes request_buf;   // bytes received so far, < message_size while RECVING
    Bytes response_buf;  // bytes still to send, nonempty while SENDING

    friend bool operator==(const Connection&, const Connection&) = default;
    friend bool operator<(const Connection& a, const Connection& b) {
        if (a.id != b.id) return a.id < b.id;
        if (a.state != b.state) return a.state < b.state;
        if (a.request_buf != b.request_buf) return a.request_buf < b.request_buf;
        return a.response_buf < b.response_buf;
    }
};

struct ServerState {
    std::vector<Connection> conns;
    Message last_full_msg;

    friend bool operator==(const ServerState&, const ServerState&) = default;
    friend bool operator<(const ServerState& a, const ServerState& b) {
        if (!(a.conns == b.conns)) return a.conns < b.conns;
        return a.last_full_msg < b.last_full_msg;
    }
};

std::string show_server_state(const ServerState& st);

// Deliberate model-level bugs for exercising the refinement checker.
enum class ModelMutant : std::uint8_t {
    None,
    EchoReply,  // reply with the just-completed request instead of the store
    NoStore,    // never update the stored message
};

using LoopResult = std::pair<bool, ServerState>;

// Replace every element satisfying pred by `replacement` (the model keeps at
// most one live connection per id, so at most one element matches).
std::vector<Connection> replace_when(const std::function<bool(const Connection&)>& pred,
                                     const Connection& replacement,
                                     const std::vector<Connection>& conns);

// Accept effect; Some id yields a fresh RECVING connection, None no change.
ITree<std::optional<Connection>> accept_connection(const SwapContext& ctx, EndpointId endpoint);

// Service one connection: receive into the request buffer (completing a
// request swaps it with the store and switches to SENDING) or send from the
// response buffer (draining it switches back to RECVING). Recv failure or an
// orderly close (empty read) deletes the connection; send failure deletes.
ITree<std::pair<Connection, Message>> process_conn(const SwapContext& ctx,
                                                   std::size_t buffer_size, Connection conn,
                                                   Message last_full_msg,
                                                   ModelMutant mutant = ModelMutant::None);

// One iteration of the server loop: accept, or service one RECVING/SENDING
// connection chosen nondeterministically.
ITree<LoopResult> select_loop_body(const SwapContext& ctx, EndpointId endpoint,
                                   std::size_t buffer_size, ServerState st,
                                   ModelMutant mutant = ModelMutant::None);

// The whole server model: the loop body repeated forever from ([], zeros).
ITree<Unit> impl_model(const SwapContext& ctx, EndpointId endpoint, std::size_t buffer_size,
                       ModelMutant mutant = ModelMutant::None);

ITree<Unit> impl_model_from(const SwapContext& ctx, EndpointId endpoint,
                            std::size_t buffer_size, ServerState st,
                            ModelMutant mutant = ModelMutant::None);

// One enumerated iteration of the model: the visible effect it performed,
// the response it consumed, and the successor state. Derived from the loop
// body tree; used by the refinement search and the offline log checker.
struct ModelStep {
    Effect effect;
    Value response;
    ServerState next;
};

std::vector<ModelStep> model_step(const SwapContext& ctx, const ServerState& st,
                                  ModelMutant mutant = ModelMutant::None);

// Network events a single effect/response pair is observed as on the server
// side of the wire (Accept None, failed/empty reads and zero-length sends
// produce none).
NetworkTrace impl_event_to_network(const Effect& effect, const Value& response);

// --- Scripted-oracle interpreter -----------------------------------------
//
// A script is the oracle's answer list: one response per effect the model
// issues, internal choices included. Replaying a script drives the model
// deterministically.
struct ModelRun {
    std::vector<TraceEvent> log;  // visible effects with their responses, in order
    ServerState final_state;
    bool script_exhausted = false;  // ran out of script before max_events
};

ModelRun run_model_script(const SwapContext& ctx, const std::vector<Value>& script,
                          ModelMutant mutant = ModelMutant::None,
                          std::size_t max_events = 10'000);

// Is `server_log` (as written by the live server's effect log) the
// flattening of some model execution? Searches over oracle responses.
bool explains_server_log(std::size_t message_size, const NetworkTrace& server_log);

}  // namespace swapnet
