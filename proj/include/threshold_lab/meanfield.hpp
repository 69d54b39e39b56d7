#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "threshold_lab/model.hpp"

namespace threshold_lab::meanfield {

/// Derivative of a FractionState: du has the shape of u, dv the shape of v.
struct Derivative {
    std::vector<double> du;
    std::vector<double> dv;

    double max_norm() const noexcept;
};

/// Mean-field drift with the absorbing closure u_{K+1} = 0.
/// Throws truncation_too_short when the state holds fewer than M+1 working levels.
Derivative drift(const FractionState& state, const ModelParams& params);

/// Flat-vector drift used by the integrator. Layout: y = (u_1..u_K, v_0..v_{M-1}).
void drift_flat(std::span<const double> y, int k_trunc, const ModelParams& params, std::span<double> out);

struct Trajectory {
    std::vector<double> times;
    std::vector<FractionState> states;
};

struct IntegrateOptions {
    /// Record a state every sample_dt time units (the end point is always recorded).
    /// Zero records every accepted step.
    double sample_dt = 0.0;
    double h_max = 1e9;
};

/// Adaptive explicit Runge-Kutta integration of the drift starting from `initial`.
/// Accepted states are projected back onto Omega; a step that leaves Omega by more
/// than 1e-10 throws invariant_violation, NaN/inf throws non_finite.
Trajectory integrate(const FractionState& initial, const ModelParams& params, double t_end,
                     double step_tol, const IntegrateOptions& options = {});

struct SteadyStateOptions {
    double step_tol = 1e-10;
    double t_max = 1e7;
    int k_initial = 16;
    int k_cap = 20000;
    /// Truncation grows while u_K exceeds this.
    double tail_cutoff = 1e-14;
};

struct SteadyState {
    FractionState state;
    double t_reached = 0.0;
    double drift_norm = 0.0;
};

/// Integrates from the empty system until the drift max-norm and the omega distance
/// between states one time unit apart both fall below `tol`.
/// Throws unstable for lambda >= mu, no_convergence once t_max is exceeded.
SteadyState steady_state(const ModelParams& params, double tol, const SteadyStateOptions& options = {});

/// CSV with header t,u1..uK,v0..v{M-1}.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

}  // namespace threshold_lab::meanfield
