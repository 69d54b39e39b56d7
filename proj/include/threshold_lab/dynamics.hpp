#pragma once

// Transition rules of the finite-N system. The simulator and the exact CTMC builder
// both consume these, so the oracle checks the dynamics rather than a second copy.

#include <cstdint>
#include <span>
#include <vector>

namespace threshold_lab {

enum class Mode : std::uint8_t { dormant, working };

struct ServerState {
    int queue_length = 0;  ///< includes the task in service
    Mode mode = Mode::dormant;

    friend bool operator==(const ServerState&, const ServerState&) = default;
};

/// How the d candidates are drawn.
enum class Sampling : std::uint8_t { without_replacement, with_replacement };

/// How a tie between equally short sampled queues is broken.
enum class TieBreak : std::uint8_t {
    uniform,         ///< uniformly over every minimal sampled server
    prefer_working,  ///< uniformly over the minimal working servers if there are any
};

/// A dormant server that reaches `m` tasks wakes and starts serving.
ServerState after_arrival(ServerState s, int m) noexcept;

/// Service completion at a working server; an emptied server goes dormant.
ServerState after_completion(ServerState s) noexcept;

inline bool is_serving(ServerState s) noexcept { return s.mode == Mode::working; }

/// Positions (into `sampled`) eligible to receive the arrival. The dispatcher picks
/// one of them uniformly.
void dispatch_candidates(std::span<const ServerState> sampled, TieBreak tie, std::vector<int>& out);

}  // namespace threshold_lab
