#pragma once

// Independent references: exact finite-N generator solves, closed forms and exact
// enumeration of dispatch probabilities.

#include <cstdint>
#include <vector>

#include "threshold_lab/dynamics.hpp"
#include "threshold_lab/model.hpp"

namespace threshold_lab::oracle {

/// Local states of one server: dormant with 0..M-1 tasks, then working with 1..cap tasks.
struct LocalStates {
    int m = 1;
    int cap = 1;

    int size() const noexcept { return m + cap; }
    ServerState decode(int index) const noexcept;
    int encode(ServerState s) const noexcept;
};

struct CtmcSolution {
    ModelParams params;
    int n_servers = 0;
    int queue_cap = 0;
    LocalStates local;
    std::vector<double> pi;    ///< lexicographic over servers, server 0 most significant
    std::vector<double> u;     ///< u_1..u_cap
    std::vector<double> v;     ///< v_0..v_{M-1}
    double eq = 0.0;           ///< mean tasks per server
    double tail_mass = 0.0;    ///< probability that some server holds queue_cap tasks
    double residual = 0.0;     ///< max |(pi Q)_i|
    double total_mass = 0.0;   ///< sum of pi before any rounding, for the invariant check

    std::vector<ServerState> state(std::size_t index) const;
};

struct CtmcOptions {
    Sampling sampling = Sampling::without_replacement;
    TieBreak tie_break = TieBreak::uniform;
    std::size_t max_states = 1'000'000;
    double max_tail_mass = 1e-8;
};

/// Stationary law of the N-server chain truncated at queue_cap (arrivals to a full
/// server are lost). Throws state_space_too_large, truncation_mass_too_high.
CtmcSolution ctmc_exact_small_n(const ModelParams& params, int n_servers, int queue_cap,
                                const CtmcOptions& options = {});

struct NpolicyMm1 {
    double eq = 0.0;
    std::vector<double> p_dormant;   ///< P(dormant, j tasks), j = 0..M-1
    std::vector<double> p_working;   ///< P(working, n tasks) at index n-1, until below 1e-300
    double verification_error = 0.0;  ///< max deviation from the truncated generator solve
};

/// Closed-form N-policy M/M/1 (d = 1): E(Q) = rho/(1-rho) + (M-1)/2. Checked against a
/// truncated linear solve before returning; throws invariant_violation above 1e-8.
NpolicyMm1 npolicy_mm1(const ModelParams& params);

/// delta_k = rho^{(d^k - 1)/(d - 1)} for M = 1 (rho^k for d = 1), k = 1.. until the
/// value drops below `cutoff`.
std::vector<double> supermarket_m1(const ModelParams& params, double cutoff = 1e-300);

/// W_k through the binomial sum  sum_{n=1}^{d} C(d,n) low^{d-n} (high-low)^{n-1}.
double rate_w_binomial(int k, const FractionState& state, const ModelParams& params);

/// Server counts by exact queue length: working[q] for q >= 1 (index 0 unused),
/// dormant[q] for q < M.
struct Population {
    std::vector<std::int64_t> working;
    std::vector<std::int64_t> dormant;

    std::int64_t total() const noexcept;
    std::int64_t at_level(int q) const noexcept;
    std::int64_t above(int q) const noexcept;  ///< servers with more than q tasks
};

/// Rounds N times the level gaps of `state` to integers summing to n_servers.
Population synthesize_population(const FractionState& state, std::int64_t n_servers);

/// Fractions (u, v) of a population.
FractionState population_state(const Population& population, int m);

namespace detail {
template <class T>
T choose(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return T(0);
    T out(1);
    for (std::int64_t t = 0; t < k; ++t) {
        out *= T(n - t);
        out /= T(t + 1);
    }
    return out;
}

template <class T>
T power(T base, int e) {
    T out(1);
    for (int i = 0; i < e; ++i) out *= base;
    return out;
}
}  // namespace detail

/// Exact probability that an arrival joins a server of the given mode holding exactly
/// k-1 tasks. The sample has d servers (hypergeometric without replacement, multinomial
/// with), the minimum sampled length wins, and ties follow `tie`.
template <class T = double>
T enumerate_sampling_probability(const Population& pop, int d, int k, Mode mode, Sampling sampling,
                                 TieBreak tie) {
    const int level = k - 1;
    if (level < 0) return T(0);
    const std::int64_t n = pop.total();
    const std::int64_t w = level >= 1 && level < static_cast<int>(pop.working.size()) ? pop.working[level] : 0;
    const std::int64_t z = level < static_cast<int>(pop.dormant.size()) ? pop.dormant[level] : 0;
    const std::int64_t rest = pop.above(level);
    if ((mode == Mode::working ? w : z) == 0) return T(0);

    T sum(0);
    for (int i = 0; i <= d; ++i) {
        for (int j = 0; i + j <= d; ++j) {
            if (i + j == 0) continue;
            const int r = d - i - j;
            T weight;
            if (sampling == Sampling::without_replacement) {
                weight = detail::choose<T>(w, i) * detail::choose<T>(z, j) * detail::choose<T>(rest, r) /
                         detail::choose<T>(n, d);
            } else {
                const T multinomial = detail::choose<T>(d, i) * detail::choose<T>(d - i, j);
                weight = multinomial * detail::power(T(w), i) * detail::power(T(z), j) * detail::power(T(rest), r) /
                         detail::power(T(n), d);
            }
            if (weight == T(0)) continue;
            T share;
            if (tie == TieBreak::uniform) {
                share = T(mode == Mode::working ? i : j) / T(i + j);
            } else if (mode == Mode::working) {
                share = T(i > 0 ? 1 : 0);
            } else {
                share = T(i == 0 ? 1 : 0);
            }
            sum += weight * share;
        }
    }
    return sum;
}

}  // namespace threshold_lab::oracle
