#include "threshold_lab/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace threshold_lab::fixedpoint {

namespace {

std::size_t sz(int i) { return static_cast<std::size_t>(i); }

double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

// Bisection on a predicate that is true on the left end and false on the right end.
// Stops at width <= tol or when the midpoint no longer separates the endpoints.
template <class Pred>
std::pair<double, double> bisect(Pred left_side, double lo, double hi, double tol) {
    while (hi - lo > tol) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        if (left_side(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return {lo, hi};
}

enum class TailFate { decays, goes_negative, stalls };

struct TailResult {
    std::vector<double> delta;
    double flux_max = 0.0;
    TailFate fate = TailFate::decays;
};

// Extends delta_1..delta_{M+1} downwards until the cutoff. delta_0 = 1 is prepended
// implicitly for M = 1.
TailResult extend_tail(std::vector<double> delta, const ModelParams& p, const SolverOptions& opt) {
    TailResult out;
    const int m = p.m;
    // Head flux at k = M (equal to the closure residual for M >= 2).
    if (m >= 2) {
        out.flux_max = std::abs(p.mu * delta[sz(m)] - p.lambda * ipow(delta[sz(m - 1)], p.d));
    }
    while (delta.back() >= opt.tail_cutoff) {
        if (static_cast<int>(delta.size()) >= opt.k_cap) {
            out.fate = TailFate::stalls;
            break;
        }
        const double prev = delta.size() >= 2 ? delta[delta.size() - 2] : 1.0;
        const double cur = delta.back();
        TailStep step;
        try {
            step = tail_extend(prev, cur, p);
        } catch (const Error&) {
            out.fate = TailFate::goes_negative;
            break;
        }
        if (step.next > cur) {
            out.fate = TailFate::stalls;
            break;
        }
        out.flux_max = std::max(out.flux_max, step.flux_deviation);
        delta.push_back(std::max(step.next, 0.0));
    }
    out.delta = std::move(delta);
    return out;
}

StationaryDistribution assemble(const ModelParams& p, std::vector<double> xi, TailResult tail,
                                const SolverOptions& opt) {
    StationaryDistribution dist;
    dist.params = p;
    dist.xi = std::move(xi);
    dist.delta = std::move(tail.delta);
    dist.delta2 = dist.delta_at(2);
    dist.flux_deviation_max = tail.flux_max;
    double worst = 0.0;
    for (double r : stationary_residuals(dist)) worst = std::max(worst, std::abs(r));
    dist.residual_max = worst;
    if (!(worst < opt.residual_tol)) {
        std::ostringstream why;
        why << "stationary residual " << worst << " exceeds " << opt.residual_tol;
        throw Error(Errc::invariant_violation, why.str());
    }
    if (!(tail.flux_max < opt.flux_tol)) {
        std::ostringstream why;
        why << "tail flux deviation " << tail.flux_max << " exceeds " << opt.flux_tol;
        throw Error(Errc::tail_diverged, why.str());
    }
    return dist;
}

std::string profile_string(const std::vector<ScanPoint>& scan) {
    std::ostringstream os;
    os << "R profile:";
    for (const auto& pt : scan) {
        os << " (" << pt.delta2 << ", ";
        if (pt.residual) {
            os << *pt.residual;
        } else {
            os << "infeasible";
        }
        os << ")";
    }
    return os.str();
}

}  // namespace

double StationaryDistribution::xi_at(int j) const noexcept {
    return (j >= 0 && j < static_cast<int>(xi.size())) ? xi[sz(j)] : 0.0;
}

double StationaryDistribution::delta_at(int k) const noexcept {
    return (k >= 1 && k <= static_cast<int>(delta.size())) ? delta[sz(k - 1)] : 0.0;
}

FractionState StationaryDistribution::to_state() const { return FractionState::unchecked(delta, xi); }

std::optional<double> solve_xi(int k, double xi_prev, double delta_prev, double delta_k, double delta2,
                               const ModelParams& p, double tol) {
    if (k < 1) throw Error(Errc::index_out_of_range, "solve_xi needs k >= 1");
    const double delta1 = p.rho();
    const double high = delta_prev + xi_prev;
    auto g = [&](double x) {
        return p.lambda * (xi_prev - x) * power_sum(high, delta_k + x, p.d) + p.mu * (delta2 - delta1);
    };
    if (!(xi_prev > 0.0)) return std::nullopt;
    if (!(g(0.0) >= 0.0) || !(g(xi_prev) < 0.0)) return std::nullopt;
    auto [lo, hi] = bisect([&](double x) { return g(x) >= 0.0; }, 0.0, xi_prev, tol);
    return std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
}

ChainResult forward_chain(double delta2, const ModelParams& p, double tol) {
    if (p.m < 2) throw Error(Errc::invalid_params, "forward_chain needs M >= 2");
    const double rho = p.rho();
    const double delta1 = rho;
    ChainResult r;
    r.xi = {1.0 - rho};
    r.delta = {delta1, delta2};
    auto dl = [&](int k) { return r.delta[sz(k - 1)]; };

    for (int k = 1; k <= p.m - 1; ++k) {
        const double delta_prev = k == 1 ? delta1 : dl(k - 1);
        const auto x = solve_xi(k, r.xi[sz(k - 1)], delta_prev, dl(k), delta2, p, tol);
        if (!x) {
            r.infeasible_level = k;
            return r;
        }
        r.xi.push_back(*x);
        if (k >= 2) {
            const double wk = power_sum(dl(k - 1) + r.xi[sz(k - 1)], dl(k) + r.xi[sz(k)], p.d);
            r.delta.push_back(dl(k) + rho * (dl(k) - dl(k - 1)) * wk + (delta2 - delta1));
        }
    }
    const int m = p.m;
    const double xi_last = r.xi[sz(m - 1)];
    const double wm = power_sum(dl(m - 1) + xi_last, dl(m), p.d);
    r.residual = p.lambda * xi_last * wm - p.mu * (delta1 - delta2);
    r.delta.push_back(dl(m) + rho * (dl(m) - dl(m - 1)) * wm + (delta2 - delta1));
    return r;
}

TailStep tail_extend(double delta_prev, double delta_k, const ModelParams& p) {
    const double dk_pow = ipow(delta_k, p.d);
    const double next = delta_k - p.rho() * (ipow(delta_prev, p.d) - dk_pow);
    if (next < -1e-10) {
        std::ostringstream why;
        why << "tail recursion went negative (" << next << ")";
        throw Error(Errc::negative_tail, why.str());
    }
    return {next, std::abs(p.mu * next - p.lambda * dk_pow)};
}

std::vector<double> stationary_residuals(const StationaryDistribution& dist) {
    const ModelParams& p = dist.params;
    const int m = p.m;
    const int k_trunc = static_cast<int>(dist.delta.size());
    const FractionState s = dist.to_state();
    auto delta = [&](int k) { return dist.delta_at(k); };
    auto xi = [&](int j) { return dist.xi_at(j); };
    auto w = [&](int k) { return rate_w(k, s, p); };
    const double wake = p.lambda * xi(m - 1) * w(m);

    std::vector<double> res;
    res.push_back(p.mu * (delta(2) - delta(1)) + wake);
    for (int k = 2; k <= m; ++k) {
        res.push_back(p.lambda * (delta(k - 1) - delta(k)) * w(k) + p.mu * (delta(k + 1) - delta(k)) + wake);
    }
    for (int k = m + 1; k <= k_trunc; ++k) {
        res.push_back(p.lambda * (delta(k - 1) - delta(k)) * w(k) + p.mu * (delta(k + 1) - delta(k)));
    }
    res.push_back(p.mu * (delta(1) - delta(2)) - wake);
    for (int j = 1; j <= m - 1; ++j) {
        res.push_back(p.lambda * (xi(j - 1) - xi(j)) * w(j) - wake);
    }
    return res;
}

std::vector<ScanPoint> scan_delta2(const ModelParams& p, double lo, double hi, int points, double tol) {
    std::vector<ScanPoint> out;
    out.reserve(sz(points));
    for (int i = 0; i < points; ++i) {
        const double d2 = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points);
        const auto chain = forward_chain(d2, p, tol);
        out.push_back({d2, chain.feasible() ? std::optional<double>(chain.residual) : std::nullopt});
    }
    return out;
}

double feasibility_boundary(const ModelParams& p, double tol) {
    const double delta1 = p.rho();
    const double hi = delta1 * (1.0 - 1e-9);
    if (!forward_chain(hi, p, tol).feasible()) {
        throw Error(Errc::no_root, "no feasible delta_2 even next to delta_1");
    }
    auto [lo, top] = bisect([&](double d2) { return !forward_chain(d2, p, tol).feasible(); }, 0.0, hi, tol);
    (void)lo;
    return top;
}

StationaryDistribution solve(const ModelParams& params, const SolverOptions& opt) {
    const ModelParams p = require_stable(params);
    const double rho = p.rho();

    if (p.m == 1) {
        auto tail = extend_tail({rho}, p, opt);
        if (tail.fate != TailFate::decays) {
            throw Error(Errc::tail_diverged, "supermarket tail recursion failed to decay");
        }
        return assemble(p, {1.0 - rho}, std::move(tail), opt);
    }

    const double delta1 = rho;
    const double boundary = feasibility_boundary(p, opt.inner_tol);
    const auto scan = scan_delta2(p, boundary, delta1, opt.grid, opt.inner_tol);

    std::vector<std::pair<double, double>> brackets;
    for (std::size_t i = 0; i < scan.size(); ++i) {
        const double hi_d2 = i + 1 < scan.size() ? scan[i + 1].delta2 : delta1 * (1.0 - 1e-15);
        const std::optional<double> hi_r =
            i + 1 < scan.size() ? scan[i + 1].residual : std::optional<double>(p.lambda * (1.0 - rho));
        if (scan[i].residual && hi_r && *scan[i].residual < 0.0 && *hi_r >= 0.0) {
            brackets.emplace_back(scan[i].delta2, hi_d2);
        }
    }
    if (brackets.empty()) {
        throw Error(Errc::no_root, "closure residual never changes sign; " + profile_string(scan));
    }

    auto residual_negative = [&](double d2) {
        const auto c = forward_chain(d2, p, opt.inner_tol);
        return !c.feasible() || c.residual < 0.0;
    };
    auto build = [&](double d2) -> std::optional<StationaryDistribution> {
        auto chain = forward_chain(d2, p, opt.inner_tol);
        if (!chain.feasible()) return std::nullopt;
        auto tail = extend_tail(chain.delta, p, opt);
        if (tail.fate != TailFate::decays) return std::nullopt;
        return assemble(p, std::move(chain.xi), std::move(tail), opt);
    };

    // Lowest bracket that passes tail validation wins.
    for (const auto& [lo0, hi0] : brackets) {
        auto [lo, hi] = bisect(residual_negative, lo0, hi0, opt.outer_tol);
        const auto c_lo = forward_chain(lo, p, opt.inner_tol);
        const auto c_hi = forward_chain(hi, p, opt.inner_tol);
        const double root = (c_lo.feasible() && std::abs(c_lo.residual) < std::abs(c_hi.residual)) ? lo : hi;
        if (auto dist = build(root)) return *dist;
    }

    // Fallback: bisect delta_2 on the fate of the tail itself (negative below the root,
    // stalling above it).
    auto tail_low = [&](double d2) {
        const auto chain = forward_chain(d2, p, opt.inner_tol);
        if (!chain.feasible()) return true;
        return extend_tail(chain.delta, p, opt).fate == TailFate::goes_negative;
    };
    auto [lo, hi] = bisect(tail_low, boundary, delta1 * (1.0 - 1e-15), opt.outer_tol);
    for (double d2 : {lo, hi}) {
        if (auto dist = build(d2)) return *dist;
    }
    throw Error(Errc::tail_diverged, "no delta_2 root yields a decaying tail; " + profile_string(scan));
}

}  // namespace threshold_lab::fixedpoint
