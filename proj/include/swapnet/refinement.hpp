#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swapnet/impl_model.hpp"
#include "swapnet/network_model.hpp"
#include "swapnet/swap_spec.hpp"

namespace swapnet {

// Search state while explaining an observed trace: the network being
// simulated, the not-yet-unfolded rest of the spec, and the server-side
// events committed so far. Every event in `witness` was validated by
// server_transition from the network state current at the time.
struct CheckState {
    NetworkState ns;
    ITree<Unit> spec_rest;
    NetworkTrace witness;
};

struct Verdict {
    enum class Kind { Accepted, Rejected, BudgetExceeded };
    Kind kind = Kind::BudgetExceeded;
    NetworkTrace witness;         // Accepted: spec-side trace explaining the observation
    NetworkTrace counterexample;  // Rejected: the offending observed trace

    bool accepted() const { return kind == Kind::Accepted; }
    bool rejected() const { return kind == Kind::Rejected; }
};

struct CheckOptions {
    std::uint64_t node_budget = 1'000'000;
};

// Is tc an observation the linear specification allows? Searches for a spec
// trace ts with network_reordered(ts, tc): client events are consumed
// greedily, and whenever the observation is blocked on a reply byte the
// search branches over spec steps (accept a pending connection, or swap on
// a connection with a complete buffered request) at those two linearization
// points.
Verdict spec_behavior_member(const SwapContext& ctx, const NetworkTrace& tc,
                             const CheckOptions& opts = {});

// Same question against the implementation model: is tc an observation of
// some model execution with at most `depth` effects? Branches over model
// iterations whose responses are consistent with the simulated network.
Verdict impl_behavior_member(const SwapContext& ctx, const NetworkTrace& tc, std::size_t depth,
                             ModelMutant mutant = ModelMutant::None,
                             const CheckOptions& opts = {});

// Reference implementation of spec membership by enumeration: every way of
// interleaving per-connection accept/swap chains is materialized as a spec
// trace and checked with network_reordered. Exponential; oracle only.
bool naive_spec_member(const SwapContext& ctx, const NetworkTrace& tc);

struct RefineResult {
    enum class Kind { Holds, Counterexample, BudgetExceeded };
    Kind kind = Kind::Holds;
    NetworkTrace counterexample;
    std::uint64_t nodes_visited = 0;
    std::uint64_t traces_checked = 0;  // client events enumerated (per prefixes)
};

struct RefineConfig {
    EnumConfig enumeration{.alphabet = {'a', 'b'}, .conn_ids = {1, 2}, .message_size = 1};
    std::size_t depth = 8;  // max observed (client-side) events per trace
    ModelMutant mutant = ModelMutant::None;
    std::uint64_t node_budget = 400'000'000;
};

// Bounded network refinement: every client-observable trace of the
// implementation model with at most `depth` events is accepted by the
// linear specification. Explores the product of the model, the network, and
// the set of viable spec explanations; reports the first inexplicable
// observation as a counterexample.
RefineResult network_refines_bounded(const RefineConfig& cfg);

// --- Linearization-point instrumentation ----------------------------------

// Witness construction replayed over a deterministic model run log. The
// witness is extended only at accept completions (one NewConnection block)
// and at message completions (a ToServer block then a FromServer block).
struct ExplainedRun {
    NetworkTrace witness;
    std::vector<std::size_t> extension_points;  // log indexes where blocks were appended
    std::size_t accept_extensions = 0;          // blocks appended at accept completions
    std::size_t swap_extensions = 0;            // blocks appended at message completions
    bool witness_is_spec_trace = false;
};

ExplainedRun explain_model_run(const SwapContext& ctx, const std::vector<TraceEvent>& log);

// Do all claimed extension points of a run sit at accept completions or
// message completions of `log`? Feeding it points from instrumentation that
// also extends elsewhere (e.g. on partial receives) returns false.
bool linearization_points_check(const SwapContext& ctx, const std::vector<TraceEvent>& log,
                                const std::vector<std::size_t>& extension_points);

}  // namespace swapnet
