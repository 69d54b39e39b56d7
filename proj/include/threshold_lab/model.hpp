#pragma once

#include <span>
#include <vector>

#include "threshold_lab/error.hpp"

namespace threshold_lab {

/// Per-server arrival rate, service rate, sample size and wake threshold.
struct ModelParams {
    double lambda = 0.39;
    double mu = 1.0;
    int d = 2;
    int m = 2;

    bool stable() const noexcept { return lambda < mu; }
    double rho() const noexcept { return lambda / mu; }
};

/// Checks the field invariants and returns the params unchanged.
/// Throws Error{invalid_params}. Stability is not required here; see require_stable.
ModelParams validate(const ModelParams& params);

/// validate() plus the lambda < mu gate used by every solver entry point.
ModelParams require_stable(const ModelParams& params);

inline constexpr double kStateTolerance = 1e-12;

/// Tail fractions of the mean-field state space.
///
/// u(k), k >= 1: fraction of servers that are working with at least k tasks.
/// v(j), 0 <= j < M: fraction of servers that are dormant with at least j tasks.
/// Entries past the stored truncation read as exactly zero, and so does v(j) for j >= M.
class FractionState {
public:
    FractionState() = default;

    /// u holds u_1..u_K, v holds v_0..v_{M-1}. Throws invariant_violation when the
    /// state is outside Omega by more than `tol`.
    FractionState(std::vector<double> u, std::vector<double> v, double tol = kStateTolerance);

    /// Builds without checking. Callers that already projected onto Omega use this.
    static FractionState unchecked(std::vector<double> u, std::vector<double> v);

    /// u = 0, v_0 = 1, v_j = 0 for j > 0.
    static FractionState empty(int m, int k_trunc);

    double u(int k) const noexcept;
    double v(int j) const noexcept;
    int truncation() const noexcept { return static_cast<int>(u_.size()); }
    int m() const noexcept { return static_cast<int>(v_.size()); }

    std::span<const double> us() const noexcept { return u_; }
    std::span<const double> vs() const noexcept { return v_; }

    /// Same state with u padded by zeros (or cut) to k_trunc entries.
    FractionState with_truncation(int k_trunc) const;

    bool in_omega(double tol = kStateTolerance) const noexcept;

private:
    std::vector<double> u_;
    std::vector<double> v_;
};

struct OmegaDistance {
    double value = 0.0;
};

/// sum_{j=0}^{d-1} a^j b^{d-1-j}; the divided difference (a^d - b^d)/(a - b) without the division.
double power_sum(double a, double b, int d) noexcept;

/// Sampling-rate multiplier W_k, k >= 1. Throws index_out_of_range for k < 1.
double rate_w(int k, const FractionState& state, const ModelParams& params);

/// W_k over arbitrary accessors u(k), v(j) that already return 0 past truncation and
/// for j >= m. Shared by rate_w and the flat-vector drift.
template <class U, class V>
double rate_w_from(int k, int m, int d, U&& u, V&& v) noexcept {
    double high = 0.0;
    double low = 0.0;
    if (k == 1) {
        high = u(1) + v(0);
        low = u(1) + v(1);
    } else if (k <= m - 1) {
        high = u(k - 1) + v(k - 1);
        low = u(k) + v(k);
    } else if (k == m) {
        high = u(m - 1) + v(m - 1);
        low = u(m);
    } else {
        high = u(k - 1);
        low = u(k);
    }
    return power_sum(high, low, d);
}

/// Weighted sup metric on Omega; shorter states are padded with zeros.
OmegaDistance omega_distance(const FractionState& a, const FractionState& b) noexcept;

}  // namespace threshold_lab
