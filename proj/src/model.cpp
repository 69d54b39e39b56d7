#include "threshold_lab/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace threshold_lab {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::invalid_params: return "InvalidParams";
        case Errc::unstable: return "Unstable";
        case Errc::index_out_of_range: return "IndexOutOfRange";
        case Errc::truncation_too_short: return "TruncationTooShort";
        case Errc::invariant_violation: return "InvariantViolation";
        case Errc::non_finite: return "NonFinite";
        case Errc::no_convergence: return "NoConvergence";
        case Errc::no_root: return "NoRoot";
        case Errc::tail_diverged: return "TailDiverged";
        case Errc::negative_tail: return "NegativeTail";
        case Errc::d_exceeds_n: return "DExceedsN";
        case Errc::queue_cap_exceeded: return "QueueCapExceeded";
        case Errc::state_space_too_large: return "StateSpaceTooLarge";
        case Errc::truncation_mass_too_high: return "TruncationMassTooHigh";
        case Errc::bound_infeasible: return "BoundInfeasible";
        case Errc::invalid_config: return "InvalidConfig";
    }
    return "Unknown";
}

ModelParams validate(const ModelParams& params) {
    std::ostringstream why;
    if (!(params.lambda > 0.0) || !std::isfinite(params.lambda)) {
        why << "lambda must be positive and finite, got " << params.lambda;
    } else if (!(params.mu > 0.0) || !std::isfinite(params.mu)) {
        why << "mu must be positive and finite, got " << params.mu;
    } else if (params.d < 1) {
        why << "d must be >= 1, got " << params.d;
    } else if (params.m < 1) {
        why << "m must be >= 1, got " << params.m;
    } else {
        return params;
    }
    throw Error(Errc::invalid_params, why.str());
}

ModelParams require_stable(const ModelParams& params) {
    validate(params);
    if (!params.stable()) {
        std::ostringstream why;
        why << "system is stable only if lambda < mu (lambda=" << params.lambda
            << ", mu=" << params.mu << ")";
        throw Error(Errc::unstable, why.str());
    }
    return params;
}

namespace {

bool nonincreasing_in_unit(std::span<const double> xs, double tol) {
    double prev = 1.0;
    for (double x : xs) {
        if (!std::isfinite(x) || x < -tol || x > prev + tol) return false;
        prev = x;
    }
    return true;
}

}  // namespace

FractionState::FractionState(std::vector<double> u, std::vector<double> v, double tol)
    : u_(std::move(u)), v_(std::move(v)) {
    if (v_.empty()) throw Error(Errc::invariant_violation, "v must hold at least v_0");
    if (!in_omega(tol)) throw Error(Errc::invariant_violation, "state lies outside Omega");
}

FractionState FractionState::unchecked(std::vector<double> u, std::vector<double> v) {
    FractionState s;
    s.u_ = std::move(u);
    s.v_ = std::move(v);
    return s;
}

FractionState FractionState::empty(int m, int k_trunc) {
    std::vector<double> v(static_cast<std::size_t>(std::max(m, 1)), 0.0);
    v[0] = 1.0;
    return unchecked(std::vector<double>(static_cast<std::size_t>(std::max(k_trunc, 0)), 0.0),
                     std::move(v));
}

double FractionState::u(int k) const noexcept {
    if (k < 1 || k > truncation()) return 0.0;
    return u_[static_cast<std::size_t>(k - 1)];
}

double FractionState::v(int j) const noexcept {
    if (j < 0 || j >= m()) return 0.0;
    return v_[static_cast<std::size_t>(j)];
}

FractionState FractionState::with_truncation(int k_trunc) const {
    std::vector<double> u = u_;
    u.resize(static_cast<std::size_t>(std::max(k_trunc, 0)), 0.0);
    return unchecked(std::move(u), v_);
}

bool FractionState::in_omega(double tol) const noexcept {
    if (v_.empty()) return false;
    if (!nonincreasing_in_unit(u_, tol) || !nonincreasing_in_unit(v_, tol)) return false;
    return std::abs(u(1) + v(0) - 1.0) <= tol;
}

double power_sum(double a, double b, int d) noexcept {
    // Horner in a with coefficients b^i.
    double acc = 1.0;
    double b_pow = 1.0;
    for (int i = 1; i < d; ++i) {
        b_pow *= b;
        acc = acc * a + b_pow;
    }
    return acc;
}

double rate_w(int k, const FractionState& s, const ModelParams& params) {
    if (k < 1) throw Error(Errc::index_out_of_range, "rate_w needs k >= 1");
    return rate_w_from(
        k, params.m, params.d, [&](int i) { return s.u(i); }, [&](int j) { return s.v(j); });
}

OmegaDistance omega_distance(const FractionState& a, const FractionState& b) noexcept {
    double best = 0.0;
    const int kmax = std::max(a.truncation(), b.truncation());
    for (int k = 1; k <= kmax; ++k) {
        best = std::max(best, std::abs(a.u(k) - b.u(k)) / (k + 1));
    }
    const int jmax = std::max(a.m(), b.m());
    for (int j = 0; j < jmax; ++j) {
        best = std::max(best, std::abs(a.v(j) - b.v(j)) / (j + 1));
    }
    return {best};
}

}  // namespace threshold_lab
