#include "threshold_lab/dynamics.hpp"

#include <climits>

namespace threshold_lab {

ServerState after_arrival(ServerState s, int m) noexcept {
    ++s.queue_length;
    if (s.mode == Mode::dormant && s.queue_length >= m) s.mode = Mode::working;
    return s;
}

ServerState after_completion(ServerState s) noexcept {
    --s.queue_length;
    if (s.queue_length == 0) s.mode = Mode::dormant;
    return s;
}

void dispatch_candidates(std::span<const ServerState> sampled, TieBreak tie, std::vector<int>& out) {
    out.clear();
    int shortest = INT_MAX;
    for (const auto& s : sampled) shortest = s.queue_length < shortest ? s.queue_length : shortest;
    bool any_working = false;
    for (const auto& s : sampled) {
        if (s.queue_length == shortest && s.mode == Mode::working) any_working = true;
    }
    const bool working_only = tie == TieBreak::prefer_working && any_working;
    for (int i = 0; i < static_cast<int>(sampled.size()); ++i) {
        const auto& s = sampled[static_cast<std::size_t>(i)];
        if (s.queue_length != shortest) continue;
        if (working_only && s.mode != Mode::working) continue;
        out.push_back(i);
    }
}

}  // namespace threshold_lab
