#include "threshold_lab/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "threshold_lab/dopri5.hpp"

namespace threshold_lab::meanfield {

namespace {

constexpr double kOmegaSlack = 1e-10;

std::size_t sz(int i) { return static_cast<std::size_t>(i); }

std::vector<double> to_flat(const FractionState& s) {
    std::vector<double> y(s.us().begin(), s.us().end());
    y.insert(y.end(), s.vs().begin(), s.vs().end());
    return y;
}

FractionState from_flat(std::span<const double> y, int k_trunc) {
    return FractionState::unchecked(std::vector<double>(y.begin(), y.begin() + k_trunc),
                                    std::vector<double>(y.begin() + k_trunc, y.end()));
}

// Checks an accepted step against Omega and projects it back. Returns the largest
// coordinate change made by the projection.
double check_and_project(std::span<double> y, int k_trunc) {
    auto u = y.first(sz(k_trunc));
    auto v = y.subspan(sz(k_trunc));
    for (double x : y) {
        if (!std::isfinite(x)) throw Error(Errc::non_finite, "integration produced a non-finite state");
    }
    auto check_seq = [](std::span<const double> xs, const char* name) {
        double prev = 1.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] < -kOmegaSlack || xs[i] > prev + kOmegaSlack) {
                std::ostringstream why;
                why << name << " sequence left Omega at index " << i << " (value " << xs[i]
                    << ", previous " << prev << ")";
                throw Error(Errc::invariant_violation, why.str());
            }
            prev = xs[i];
        }
    };
    check_seq(u, "u");
    check_seq(v, "v");
    const double u1 = k_trunc > 0 ? u[0] : 0.0;
    if (std::abs(u1 + v[0] - 1.0) > kOmegaSlack) {
        throw Error(Errc::invariant_violation, "u_1 + v_0 drifted away from 1");
    }

    double moved = 0.0;
    auto project_seq = [&moved](std::span<double> xs) {
        double prev = 1.0;
        for (double& x : xs) {
            const double p = std::clamp(x, 0.0, prev);
            moved = std::max(moved, std::abs(p - x));
            x = p;
            prev = p;
        }
    };
    project_seq(u);
    const double v0 = 1.0 - (k_trunc > 0 ? u[0] : 0.0);
    moved = std::max(moved, std::abs(v0 - v[0]));
    v[0] = v0;
    project_seq(v);
    return moved;
}

template <class Rhs>
void advance(Dopri5<Rhs>& stepper, double& t, std::vector<double>& y, int k_trunc, double t_target) {
    while (t < t_target) {
        if (stepper.try_step(t, y, t_target)) {
            if (check_and_project(y, k_trunc) > 1e-14) stepper.invalidate();
        } else if (stepper.step_size() < 1e-12) {
            throw Error(Errc::no_convergence, "step size underflow in mean-field integration");
        }
    }
}

}  // namespace

double Derivative::max_norm() const noexcept {
    double best = 0.0;
    for (double x : du) best = std::max(best, std::abs(x));
    for (double x : dv) best = std::max(best, std::abs(x));
    return best;
}

void drift_flat(std::span<const double> y, int k_trunc, const ModelParams& p, std::span<double> out) {
    const int m = p.m;
    if (k_trunc < m + 1) {
        throw Error(Errc::truncation_too_short, "drift needs at least M+1 working levels");
    }
    auto u = [&](int k) { return (k >= 1 && k <= k_trunc) ? y[sz(k - 1)] : 0.0; };
    auto v = [&](int j) { return (j >= 0 && j < m) ? y[sz(k_trunc + j)] : 0.0; };
    auto w = [&](int k) { return rate_w_from(k, m, p.d, u, v); };

    const double lam = p.lambda;
    const double mu = p.mu;
    const double wake = lam * v(m - 1) * w(m);

    out[0] = mu * (u(2) - u(1)) + wake;
    for (int k = 2; k <= k_trunc; ++k) {
        double dk = lam * (u(k - 1) - u(k)) * w(k) + mu * (u(k + 1) - u(k));
        if (k <= m) dk += wake;
        out[sz(k - 1)] = dk;
    }
    out[sz(k_trunc)] = mu * (u(1) - u(2)) - wake;
    for (int j = 1; j < m; ++j) {
        out[sz(k_trunc + j)] = lam * (v(j - 1) - v(j)) * w(j) - wake;
    }
}

Derivative drift(const FractionState& state, const ModelParams& params) {
    if (state.m() != params.m) {
        throw Error(Errc::invariant_violation, "state carries a different number of dormant levels than M");
    }
    const auto y = to_flat(state);
    std::vector<double> out(y.size());
    drift_flat(y, state.truncation(), params, out);
    Derivative d;
    d.du.assign(out.begin(), out.begin() + state.truncation());
    d.dv.assign(out.begin() + state.truncation(), out.end());
    return d;
}

Trajectory integrate(const FractionState& initial, const ModelParams& params, double t_end,
                     double step_tol, const IntegrateOptions& options) {
    validate(params);
    if (initial.m() != params.m) {
        throw Error(Errc::invariant_violation, "initial state carries a different number of dormant levels than M");
    }
    if (!initial.in_omega(kOmegaSlack)) throw Error(Errc::invariant_violation, "initial state lies outside Omega");

    const int k_trunc = std::max(initial.truncation(), params.m + 1);
    std::vector<double> y = to_flat(initial.with_truncation(k_trunc));

    auto rhs = [&](double, std::span<const double> yy, std::span<double> out) {
        drift_flat(yy, k_trunc, params, out);
    };
    Dopri5 stepper(rhs, y.size(), step_tol, options.h_max);

    Trajectory traj;
    double t = 0.0;
    traj.times.push_back(t);
    traj.states.push_back(from_flat(y, k_trunc));
    if (options.sample_dt > 0.0) {
        for (long i = 1;; ++i) {
            const double target = std::min(t_end, static_cast<double>(i) * options.sample_dt);
            advance(stepper, t, y, k_trunc, target);
            traj.times.push_back(t);
            traj.states.push_back(from_flat(y, k_trunc));
            if (target >= t_end) break;
        }
    } else {
        while (t < t_end) {
            if (stepper.try_step(t, y, t_end)) {
                if (check_and_project(y, k_trunc) > 1e-14) stepper.invalidate();
                traj.times.push_back(t);
                traj.states.push_back(from_flat(y, k_trunc));
            } else if (stepper.step_size() < 1e-12) {
                throw Error(Errc::no_convergence, "step size underflow in mean-field integration");
            }
        }
    }
    return traj;
}

SteadyState steady_state(const ModelParams& params, double tol, const SteadyStateOptions& options) {
    require_stable(params);
    const int m = params.m;
    int k_trunc = std::max(options.k_initial, m + 1);
    std::vector<double> y = to_flat(FractionState::empty(m, k_trunc));

    // The stepper's right-hand side reads k_trunc by reference so growth is picked up.
    auto rhs = [&](double, std::span<const double> yy, std::span<double> out) {
        drift_flat(yy, k_trunc, params, out);
    };
    Dopri5 stepper(rhs, y.size(), options.step_tol);

    std::vector<double> scratch(y.size());
    FractionState previous = from_flat(y, k_trunc);
    double t = 0.0;
    while (true) {
        advance(stepper, t, y, k_trunc, t + 1.0);

        if (y[sz(k_trunc - 1)] > options.tail_cutoff && k_trunc < options.k_cap) {
            const int grown = std::min(2 * k_trunc, options.k_cap);
            std::vector<double> z(y.begin(), y.begin() + k_trunc);
            z.resize(sz(grown), 0.0);
            z.insert(z.end(), y.begin() + k_trunc, y.end());
            y = std::move(z);
            k_trunc = grown;
            stepper.resize(y.size());
            previous = previous.with_truncation(k_trunc);
            continue;
        }

        scratch.resize(y.size());
        drift_flat(y, k_trunc, params, scratch);
        double norm = 0.0;
        for (double x : scratch) norm = std::max(norm, std::abs(x));
        FractionState current = from_flat(y, k_trunc);
        const double moved = omega_distance(current, previous).value;
        previous = current;

        if (norm < tol && moved < tol && y[sz(k_trunc - 1)] <= options.tail_cutoff) {
            return SteadyState{std::move(current), t, norm};
        }
        if (t >= options.t_max) {
            std::ostringstream why;
            why << "no steady state by t=" << t << " (drift norm " << norm << ", K=" << k_trunc << ")";
            throw Error(Errc::no_convergence, why.str());
        }
    }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    if (traj.states.empty()) return;
    const int k_trunc = traj.states.front().truncation();
    const int m = traj.states.front().m();
    os << "t";
    for (int k = 1; k <= k_trunc; ++k) os << ",u" << k;
    for (int j = 0; j < m; ++j) os << ",v" << j;
    os << '\n';
    char buf[32];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        os << buf;
    };
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        put(traj.times[i]);
        const auto& s = traj.states[i];
        for (int k = 1; k <= k_trunc; ++k) {
            os << ',';
            put(s.u(k));
        }
        for (int j = 0; j < m; ++j) {
            os << ',';
            put(s.v(j));
        }
        os << '\n';
    }
}

}  // namespace threshold_lab::meanfield
