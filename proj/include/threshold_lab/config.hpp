#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "threshold_lab/fixedpoint.hpp"
#include "threshold_lab/meanfield.hpp"
#include "threshold_lab/metrics.hpp"
#include "threshold_lab/simulator.hpp"

namespace threshold_lab::config {

struct RunConfig {
    ModelParams params;
    sim::SimConfig sim;

    int k_max = 20000;
    double tol_ode = 1e-9;
    double tol_fixedpoint = 0.0;

    // ode
    double t_end = 100.0;
    double sample_dt = 1.0;

    // sweep and compare
    std::string param;
    std::vector<double> values;
    std::vector<int> n_list{20, 50, 100, 200, 500};
    bool simulate = false;

    // optimal-m
    double bound = 0.0;
    metrics::Criterion criterion = metrics::Criterion::eq;
    int m_max = 20;

    std::string out;  ///< JSON (or the primary CSV) path; empty writes to stdout
    std::string csv;  ///< secondary CSV path

    fixedpoint::SolverOptions solver_options() const;
    meanfield::SteadyStateOptions steady_state_options() const;
};

/// Every key accepted in files and (with dashes or underscores) as flags.
const std::vector<std::string>& known_keys();

/// Sets one key from its textual value. Throws Error{invalid_config} naming the key.
void apply(RunConfig& config, std::string_view key, std::string_view value);

/// Flat `key = value` lines; `#` starts a comment. Throws invalid_config for unknown
/// keys, malformed lines or a missing file.
void apply_file(RunConfig& config, const std::string& path);
void apply_text(RunConfig& config, std::string_view text, const std::string& origin = "config");

/// Cross-field checks: model and simulation invariants, sweep parameter names.
void validate(const RunConfig& config);

/// `start:stop:step` (endpoints included within step/2) or a comma-separated list.
std::vector<double> parse_values(std::string_view text);

/// 0 ok, 2 invalid input, 3 solver failure, 4 simulation guard.
int exit_code(Errc code) noexcept;

}  // namespace threshold_lab::config
