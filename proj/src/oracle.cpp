#include "threshold_lab/oracle.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <string>

namespace threshold_lab::oracle {
namespace {

using Triplet = Eigen::Triplet<double>;

// Every sample of d server indices with its probability.
void for_each_sample(int n, int d, Sampling sampling, const auto& visit) {
    std::vector<int> idx(static_cast<std::size_t>(d));
    if (sampling == Sampling::with_replacement) {
        const double p = std::pow(static_cast<double>(n), -d);
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            visit(idx, p);
            int pos = d - 1;
            while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == n) idx[static_cast<std::size_t>(pos--)] = 0;
            if (pos < 0) return;
        }
    }
    double subsets = 1.0;
    for (int t = 0; t < d; ++t) subsets = subsets * (n - t) / (t + 1);
    const double p = 1.0 / subsets;
    for (int t = 0; t < d; ++t) idx[static_cast<std::size_t>(t)] = t;
    while (true) {
        visit(idx, p);
        int pos = d - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - d + pos) --pos;
        if (pos < 0) return;
        ++idx[static_cast<std::size_t>(pos)];
        for (int t = pos + 1; t < d; ++t) idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
    }
}

}  // namespace

ServerState LocalStates::decode(int index) const noexcept {
    if (index < m) return {index, Mode::dormant};
    return {index - m + 1, Mode::working};
}

int LocalStates::encode(ServerState s) const noexcept {
    return s.mode == Mode::dormant ? s.queue_length : m + s.queue_length - 1;
}

std::vector<ServerState> CtmcSolution::state(std::size_t index) const {
    std::vector<ServerState> out(static_cast<std::size_t>(n_servers));
    const auto base = static_cast<std::size_t>(local.size());
    for (int i = n_servers - 1; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = local.decode(static_cast<int>(index % base));
        index /= base;
    }
    return out;
}

CtmcSolution ctmc_exact_small_n(const ModelParams& params_in, int n_servers, int queue_cap,
                                const CtmcOptions& options) {
    const ModelParams params = validate(params_in);
    if (n_servers < 1) throw Error(Errc::invalid_params, "n_servers must be at least 1");
    if (queue_cap < params.m) throw Error(Errc::invalid_params, "queue_cap must be at least M");
    if (options.sampling == Sampling::without_replacement && params.d > n_servers)
        throw Error(Errc::d_exceeds_n, "d exceeds N");

    CtmcSolution sol;
    sol.params = params;
    sol.n_servers = n_servers;
    sol.queue_cap = queue_cap;
    sol.local = {params.m, queue_cap};
    const auto base = static_cast<std::size_t>(sol.local.size());
    double size_d = std::pow(static_cast<double>(base), n_servers);
    if (size_d > static_cast<double>(options.max_states))
        throw Error(Errc::state_space_too_large,
                    std::to_string(static_cast<long long>(size_d)) + " states exceed the limit of " +
                        std::to_string(options.max_states));
    const auto size = static_cast<std::size_t>(size_d);

    std::vector<std::size_t> stride(static_cast<std::size_t>(n_servers));
    for (int i = n_servers - 1, s = 1; i >= 0; --i) {
        stride[static_cast<std::size_t>(i)] = static_cast<std::size_t>(s);
        s *= static_cast<int>(base);
    }

    // Transposed generator: entry (to, from) holds the rate from -> to.
    std::vector<Triplet> qt;
    std::vector<double> out_rate(size, 0.0);
    std::vector<ServerState> servers;
    std::vector<ServerState> sampled;
    std::vector<int> candidates;
    const double arrival_rate = n_servers * params.lambda;

    for (std::size_t x = 0; x < size; ++x) {
        servers = sol.state(x);
        auto move = [&](int server, ServerState next, double rate) {
            const auto i = static_cast<std::size_t>(server);
            const auto cur = static_cast<std::size_t>(sol.local.encode(servers[i]));
            const auto nxt = static_cast<std::size_t>(sol.local.encode(next));
            const std::size_t y = x - cur * stride[i] + nxt * stride[i];
            qt.emplace_back(static_cast<int>(y), static_cast<int>(x), rate);
            out_rate[x] += rate;
        };
        for_each_sample(n_servers, params.d, options.sampling, [&](const std::vector<int>& idx, double p) {
            sampled.clear();
            for (int i : idx) sampled.push_back(servers[static_cast<std::size_t>(i)]);
            dispatch_candidates(sampled, options.tie_break, candidates);
            const double share = p / static_cast<double>(candidates.size());
            for (int c : candidates) {
                const int target = idx[static_cast<std::size_t>(c)];
                const ServerState s = servers[static_cast<std::size_t>(target)];
                if (s.mode == Mode::working && s.queue_length >= queue_cap) continue;
                move(target, after_arrival(s, params.m), arrival_rate * share);
            }
        });
        for (int i = 0; i < n_servers; ++i) {
            const ServerState s = servers[static_cast<std::size_t>(i)];
            if (is_serving(s)) move(i, after_completion(s), params.mu);
        }
    }
    for (std::size_t x = 0; x < size; ++x) qt.emplace_back(static_cast<int>(x), static_cast<int>(x), -out_rate[x]);

    const auto n = static_cast<Eigen::Index>(size);
    Eigen::SparseMatrix<double> generator_t(n, n);
    generator_t.setFromTriplets(qt.begin(), qt.end());

    // Replace the first balance equation by the normalization.
    std::vector<Triplet> system;
    system.reserve(qt.size() + size);
    for (const auto& t : qt) {
        if (t.row() != 0) system.push_back(t);
    }
    for (std::size_t x = 0; x < size; ++x) system.emplace_back(0, static_cast<int>(x), 1.0);
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(system.begin(), system.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw Error(Errc::no_convergence, "sparse LU factorization failed");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(0) = 1.0;
    Eigen::VectorXd pi = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw Error(Errc::no_convergence, "sparse LU solve failed");

    sol.total_mass = pi.sum();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(pi(i))) throw Error(Errc::non_finite, "stationary vector is not finite");
        if (pi(i) < -1e-14) throw Error(Errc::invariant_violation, "negative stationary probability");
        pi(i) = std::max(pi(i), 0.0);
    }
    pi /= pi.sum();
    sol.residual = (generator_t * pi).cwiseAbs().maxCoeff();
    sol.pi.assign(pi.data(), pi.data() + n);

    sol.u.assign(static_cast<std::size_t>(queue_cap), 0.0);
    sol.v.assign(static_cast<std::size_t>(params.m), 0.0);
    const double per_server = 1.0 / n_servers;
    for (std::size_t x = 0; x < size; ++x) {
        const double p = sol.pi[x];
        bool full = false;
        for (const auto& s : sol.state(x)) {
            sol.eq += p * s.queue_length * per_server;
            if (s.mode == Mode::working) {
                for (int k = 1; k <= s.queue_length; ++k) sol.u[static_cast<std::size_t>(k - 1)] += p * per_server;
                full = full || s.queue_length >= queue_cap;
            } else {
                for (int j = 0; j <= s.queue_length; ++j) sol.v[static_cast<std::size_t>(j)] += p * per_server;
            }
        }
        if (full) sol.tail_mass += p;
    }
    if (sol.tail_mass > options.max_tail_mass)
        throw Error(Errc::truncation_mass_too_high,
                    "tail mass " + std::to_string(sol.tail_mass) + " at queue_cap " + std::to_string(queue_cap));
    return sol;
}

NpolicyMm1 npolicy_mm1(const ModelParams& params_in) {
    const ModelParams params = require_stable(params_in);
    if (params.d != 1) throw Error(Errc::invalid_params, "npolicy_mm1 needs d = 1");
    const double rho = params.rho();
    const int m = params.m;

    NpolicyMm1 out;
    out.p_dormant.assign(static_cast<std::size_t>(m), (1.0 - rho) / m);
    double p = 0.0;
    for (int n = 1;; ++n) {
        p = n <= m ? rho * (1.0 - std::pow(rho, n)) / m : p * rho;
        if (n > m && p < 1e-300) break;
        out.p_working.push_back(p);
    }
    out.eq = rho / (1.0 - rho) + (m - 1) / 2.0;

    // Truncated generator solve with tail mass near 1e-14.
    const int cap = m + std::max(1, static_cast<int>(std::ceil(std::log(1e-14) / std::log(rho))));
    const CtmcSolution ref = ctmc_exact_small_n(params, 1, cap);
    double err = 0.0;
    for (int j = 0; j < m; ++j) {
        err = std::max(err, std::abs(ref.pi[static_cast<std::size_t>(j)] - out.p_dormant[static_cast<std::size_t>(j)]));
    }
    for (int q = 1; q <= cap; ++q) {
        const double closed = static_cast<std::size_t>(q - 1) < out.p_working.size()
                                  ? out.p_working[static_cast<std::size_t>(q - 1)]
                                  : 0.0;
        err = std::max(err, std::abs(ref.pi[static_cast<std::size_t>(m + q - 1)] - closed));
    }
    double eq_dist = 0.0;
    for (int j = 0; j < m; ++j) eq_dist += j * out.p_dormant[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < out.p_working.size(); ++i) eq_dist += static_cast<double>(i + 1) * out.p_working[i];
    err = std::max({err, std::abs(ref.eq - out.eq), std::abs(eq_dist - out.eq)});
    out.verification_error = err;
    if (err > 1e-8)
        throw Error(Errc::invariant_violation,
                    "N-policy closed form deviates from the generator solve by " + std::to_string(err));
    return out;
}

std::vector<double> supermarket_m1(const ModelParams& params_in, double cutoff) {
    const ModelParams params = require_stable(params_in);
    if (params.m != 1) throw Error(Errc::invalid_params, "supermarket_m1 needs M = 1");
    const double rho = params.rho();
    std::vector<double> out;
    double exponent = 1.0;
    for (int k = 1; k <= 1'000'000; ++k) {
        const double value = std::pow(rho, exponent);
        if (value < cutoff) break;
        out.push_back(value);
        exponent = params.d == 1 ? exponent + 1.0 : exponent * params.d + 1.0;
    }
    return out;
}

double rate_w_binomial(int k, const FractionState& state, const ModelParams& params) {
    if (k < 1) throw Error(Errc::index_out_of_range, "W_k needs k >= 1");
    // Fraction of servers holding at least q tasks; working servers always hold one.
    auto at_least = [&](int q) { return state.u(std::max(q, 1)) + state.v(q); };
    const double low = at_least(k);
    const double gap = at_least(k - 1) - low;
    double sum = 0.0;
    double binom = 1.0;
    for (int n = 1; n <= params.d; ++n) {
        binom = binom * (params.d - n + 1) / n;
        sum += binom * std::pow(low, params.d - n) * std::pow(gap, n - 1);
    }
    return sum;
}

std::int64_t Population::total() const noexcept {
    std::int64_t n = 0;
    for (std::size_t q = 1; q < working.size(); ++q) n += working[q];
    for (auto c : dormant) n += c;
    return n;
}

std::int64_t Population::at_level(int q) const noexcept {
    std::int64_t n = 0;
    if (q >= 1 && q < static_cast<int>(working.size())) n += working[static_cast<std::size_t>(q)];
    if (q >= 0 && q < static_cast<int>(dormant.size())) n += dormant[static_cast<std::size_t>(q)];
    return n;
}

std::int64_t Population::above(int q) const noexcept {
    std::int64_t n = 0;
    for (std::size_t i = 1; i < working.size(); ++i) {
        if (static_cast<int>(i) > q) n += working[i];
    }
    for (std::size_t i = 0; i < dormant.size(); ++i) {
        if (static_cast<int>(i) > q) n += dormant[i];
    }
    return n;
}

Population synthesize_population(const FractionState& state, std::int64_t n_servers) {
    Population pop;
    const int k = state.truncation();
    const int m = state.m();
    pop.working.assign(static_cast<std::size_t>(k) + 1, 0);
    pop.dormant.assign(static_cast<std::size_t>(m), 0);
    const auto scale = static_cast<double>(n_servers);
    for (int q = 1; q <= k; ++q)
        pop.working[static_cast<std::size_t>(q)] = std::llround(scale * (state.u(q) - state.u(q + 1)));
    for (int q = 0; q < m; ++q)
        pop.dormant[static_cast<std::size_t>(q)] = std::llround(scale * (state.v(q) - state.v(q + 1)));

    std::int64_t* largest = &pop.dormant[0];
    for (std::size_t q = 1; q < pop.working.size(); ++q) {
        if (pop.working[q] > *largest) largest = &pop.working[q];
    }
    for (auto& c : pop.dormant) {
        if (c > *largest) largest = &c;
    }
    *largest += n_servers - pop.total();
    return pop;
}

FractionState population_state(const Population& pop, int m) {
    const auto n = static_cast<double>(pop.total());
    std::vector<double> u(pop.working.empty() ? 0 : pop.working.size() - 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(m), 0.0);
    double acc = 0.0;
    for (std::size_t q = pop.working.size(); q-- > 1;) {
        acc += static_cast<double>(pop.working[q]);
        u[q - 1] = acc / n;
    }
    acc = 0.0;
    for (std::size_t q = static_cast<std::size_t>(m); q-- > 0;) {
        if (q < pop.dormant.size()) acc += static_cast<double>(pop.dormant[q]);
        v[q] = acc / n;
    }
    return FractionState::unchecked(std::move(u), std::move(v));
}

}  // namespace threshold_lab::oracle
