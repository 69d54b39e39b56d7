#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace threshold_lab {

enum class Errc {
    invalid_params,
    unstable,
    index_out_of_range,
    truncation_too_short,
    invariant_violation,
    non_finite,
    no_convergence,
    no_root,
    tail_diverged,
    negative_tail,
    d_exceeds_n,
    queue_cap_exceeded,
    state_space_too_large,
    truncation_mass_too_high,
    bound_infeasible,
    invalid_config,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace threshold_lab
