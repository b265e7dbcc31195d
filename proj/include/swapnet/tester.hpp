#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "swapnet/impl_model.hpp"
#include "swapnet/network_model.hpp"
#include "swapnet/refinement.hpp"
#include "swapnet/swap_spec.hpp"

namespace swapnet {

struct ScenarioLimits {
    std::size_t max_connections = 5;
    std::size_t max_messages = 4;  // per connection
    std::size_t message_size = 3;
    std::vector<Byte> alphabet = {'a', 'b', 'c', 'd'};
    int reply_timeout_ms = 2000;  // wait per expected reply
    int probe_timeout_ms = 15;    // opportunistic reads that expect nothing
    int scenario_budget_ms = 4000;  // once exceeded, reads only drain what arrived
};

struct Step {
    enum class Kind : std::uint8_t { Open, SendChunk, RecvChunk, Close };
    Kind kind = Kind::Open;
    std::size_t conn = 0;   // index into per-connection message lists
    std::size_t msg = 0;    // SendChunk/RecvChunk: which message/reply
    std::size_t offset = 0; // SendChunk: range within the message
    std::size_t len = 0;
    std::size_t max_bytes = 0;  // RecvChunk
    bool probe = false;         // RecvChunk that may legitimately see nothing

    friend bool operator==(const Step&, const Step&) = default;
};

// A deterministic client plan: per-connection request messages and a
// totally ordered schedule of socket actions (per-connection order is
// open, then each message's chunks with its reply reads, then close).
struct Scenario {
    std::uint64_t seed = 0;
    std::size_t message_size = 3;
    std::vector<std::vector<Message>> messages;
    std::vector<Step> schedule;

    std::size_t size_measure() const;  // connections + messages + schedule length
    bool has_cross_connection_send_interleaving() const;
};

Scenario gen_scenario(std::uint64_t seed, const ScenarioLimits& limits = {});

struct RunOutcome {
    NetworkTrace trace;
    bool connect_failed = false;
    std::size_t expected_reply_bytes = 0;
    // No reply byte ever arrived although at least one was expected.
    bool no_response() const;
};

// Drive a live server over TCP; observation order is the append order of
// the per-byte events.
RunOutcome run_scenario_tcp(const Scenario& sc, const std::string& host, std::uint16_t port,
                            const ScenarioLimits& limits = {});

// Drive the implementation model in-process against a simulated network,
// resolving the model's nondeterminism with a seeded oracle.
RunOutcome run_scenario_model(const Scenario& sc, ModelMutant mutant = ModelMutant::None,
                              std::uint64_t oracle_seed = 0);

// Greedy shrink: repeatedly drop a connection, drop a message, merge two
// chunks, or drop a schedule step, keeping any reduction that still fails.
Scenario shrink(const Scenario& sc, const std::function<bool(const Scenario&)>& failing);

// --- Campaign running -------------------------------------------------------

// Where scenarios run. Tcp targets name a server binary so every scenario
// (and every shrink probe) gets a fresh server process.
struct CampaignTarget {
    enum class Kind { Tcp, Model } kind = Kind::Model;
    std::string server_binary;      // Tcp
    std::size_t message_size = 3;
};

struct ScenarioVerdict {
    enum class Kind { Accepted, Rejected, Inconclusive, Discarded } kind = Kind::Accepted;
    std::uint64_t seed = 0;
    NetworkTrace trace;
    Verdict check;  // the refinement verdict, when one was computed
};

struct MutantOutcome {
    int id = 0;
    std::string description;
    bool killed = false;
    std::size_t scenarios_to_kill = 0;  // counts the killing scenario
    std::size_t discards = 0;
    double elapsed_s = 0.0;
    std::uint64_t killing_seed = 0;
    NetworkTrace counterexample;        // observed trace of the shrunk scenario
    Scenario shrunk;
};

struct TestReport {
    std::size_t scenarios_run = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t inconclusive = 0;
    std::size_t discards = 0;
    double elapsed_s = 0.0;
    std::optional<MutantOutcome> counterexample;  // first rejection, shrunk
    std::vector<MutantOutcome> mutants;           // one per campaign mutant
};

std::string report_to_json(const TestReport& report);

struct CampaignOptions {
    std::uint64_t base_seed = 1;
    std::size_t max_scenarios = 1000;
    double time_budget_s = 300.0;  // per mutant
    std::size_t discard_cap = 3000;
    ScenarioLimits limits;
    bool shrink_counterexamples = true;
};

// Run one scenario against the target (spawning a fresh server for Tcp
// targets) and check the observed trace against the linear spec.
ScenarioVerdict run_and_check(const CampaignTarget& target, int mutant, std::uint64_t seed,
                              const ScenarioLimits& limits);

// Seeded sweep against one target; stops at the first rejection.
TestReport run_seed_sweep(const CampaignTarget& target, int mutant, std::uint64_t first_seed,
                          std::size_t count, const CampaignOptions& opts);

// The full mutation campaign: for every registered mutant, generate/run/check
// until the mutant is killed or the budget runs out.
TestReport mutation_campaign(const CampaignTarget& target, const CampaignOptions& opts);

// --- Subprocess control ------------------------------------------------------

// A swap server child process started via `<binary> serve --port 0 ...`.
class ServerProcess {
  public:
    ServerProcess(const std::string& binary, int mutant, std::size_t message_size);
    ~ServerProcess();
    ServerProcess(const ServerProcess&) = delete;
    ServerProcess& operator=(const ServerProcess&) = delete;

    bool ok() const { return pid_ > 0 && port_ != 0; }
    std::uint16_t port() const { return port_; }
    void stop();

  private:
    int pid_ = -1;
    std::uint16_t port_ = 0;
};

}  // namespace swapnet
