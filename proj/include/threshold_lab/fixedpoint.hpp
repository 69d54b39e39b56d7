#pragma once

#include <optional>
#include <vector>

#include "threshold_lab/model.hpp"

namespace threshold_lab::fixedpoint {

/// Stationary point of the mean-field equations: xi_j = pi^V_j (dormant tails),
/// delta_k = pi^W_k (working tails).
struct StationaryDistribution {
    ModelParams params;
    std::vector<double> xi;     ///< xi_0..xi_{M-1}
    std::vector<double> delta;  ///< delta_1..delta_K, delta_K below the tail cutoff
    double delta2 = 0.0;
    double residual_max = 0.0;
    double flux_deviation_max = 0.0;

    double xi_at(int j) const noexcept;
    double delta_at(int k) const noexcept;
    FractionState to_state() const;
};

struct SolverOptions {
    /// Bisection widths. Zero bisects to adjacent doubles; the tail recursion
    /// turns any root error into a floor for delta_k, so the defaults are strict.
    double inner_tol = 0.0;
    double outer_tol = 0.0;
    int grid = 64;
    double tail_cutoff = 1e-12;
    int k_cap = 20000;
    double residual_tol = 1e-8;
    double flux_tol = 1e-8;
};

/// Root of G_k(x) = lambda (xi_{k-1} - x) W_k(x) + mu (delta_2 - delta_1) on (0, xi_{k-1}).
/// W_k(x) = power_sum(delta_{k-1} + xi_{k-1}, delta_k + x, d); for k = 1 pass
/// delta_prev = delta_k = delta_1. Returns nullopt when G_k(0) >= 0 > G_k(xi_{k-1})
/// does not hold (an infeasible delta_2 candidate).
std::optional<double> solve_xi(int k, double xi_prev, double delta_prev, double delta_k, double delta2,
                               const ModelParams& params, double tol = 0.0);

struct ChainResult {
    std::vector<double> xi;     ///< xi_0..xi_{M-1}
    std::vector<double> delta;  ///< delta_1..delta_{M+1}
    double residual = 0.0;      ///< lambda xi_{M-1} W_M - mu (delta_1 - delta_2)
    std::optional<int> infeasible_level;  ///< set when solve_xi found no bracket at this k

    bool feasible() const noexcept { return !infeasible_level.has_value(); }
};

/// Head of the recursion for a candidate delta_2 (M >= 2).
ChainResult forward_chain(double delta2, const ModelParams& params, double tol = 0.0);

struct TailStep {
    double next = 0.0;
    double flux_deviation = 0.0;  ///< |mu delta_{k+1} - lambda delta_k^d|
};

/// delta_{k+1} = delta_k - (lambda/mu)(delta_{k-1}^d - delta_k^d). Throws negative_tail
/// when the step falls below -1e-10.
TailStep tail_extend(double delta_prev, double delta_k, const ModelParams& params);

/// Residuals of the stationary equations at (xi, delta), one per equation, in the order
/// (1), (2) k=2..M, (3) k=M+1..K, (4), (5) j=1..M-1. delta past K reads as zero.
std::vector<double> stationary_residuals(const StationaryDistribution& dist);

/// Full solve. M = 1 runs the supermarket reduction (tail recursion from delta_0 = 1).
/// Throws unstable, no_root, tail_diverged, invariant_violation (residual check).
StationaryDistribution solve(const ModelParams& params, const SolverOptions& options = {});

/// Residual profile of one delta_2 scan, exposed for diagnostics and the CLI.
struct ScanPoint {
    double delta2 = 0.0;
    std::optional<double> residual;
};
std::vector<ScanPoint> scan_delta2(const ModelParams& params, double lo, double hi, int points,
                                   double tol = 0.0);

/// Smallest feasible delta_2 (to bisection resolution); every candidate above it
/// yields a bracket at every level.
double feasibility_boundary(const ModelParams& params, double tol = 0.0);

}  // namespace threshold_lab::fixedpoint
