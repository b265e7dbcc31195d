#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace swapnet {

struct ServerConfig {
    std::uint16_t port = 0;  // 0 picks an ephemeral port
    std::size_t message_size = 3;
    std::size_t max_connections = 64;
    int poll_timeout_ms = 50;
    int mutant = 0;  // 0 = unmutated; otherwise an id from mutant_registry()
    std::string log_effects_path;  // append C/S/F lines here when nonempty
    std::atomic<bool>* stop = nullptr;               // optional shutdown flag
    std::function<void(std::uint16_t)> on_listening;  // called with the bound port
};

struct MutantInfo {
    int id;
    const char* description;
};

// The twelve selectable bugs, in the style of plausible C mistakes.
const std::vector<MutantInfo>& mutant_registry();
bool is_known_mutant(int id);

// Run the event-driven swap server: one process, one thread, nonblocking
// sockets multiplexed with poll. Returns only after *config.stop becomes
// true; throws std::runtime_error if the listener cannot be set up or the
// mutant id is unknown.
void serve(const ServerConfig& config);

}  // namespace swapnet
