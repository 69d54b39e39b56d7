#include "threshold_lab/metrics.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace threshold_lab::metrics {

QueueLengths queue_lengths(const fixedpoint::StationaryDistribution& dist) {
    QueueLengths q;
    for (double d : dist.delta) q.eq_w += d;
    for (std::size_t j = 1; j < dist.xi.size(); ++j) q.eq_d += dist.xi[j];
    q.eq = q.eq_w + q.eq_d;
    return q;
}

SojournPaper sojourn_paper(const fixedpoint::StationaryDistribution& dist) {
    const ModelParams& p = dist.params;
    const double lambda = p.lambda;
    const double mu = p.mu;
    const int m = p.m;
    const FractionState state = dist.to_state();
    const int k_end = static_cast<int>(dist.delta.size()) + 1;

    double working = 0.0;
    for (int k = 2; k <= k_end; ++k) {
        working += k * mu * (dist.delta_at(k - 1) - dist.delta_at(k)) * rate_w(k, state, p);
    }
    double dormant = 0.0;
    for (int k = 1; k <= m - 1; ++k) {
        dormant += ((m - k) / lambda + k * mu) * (dist.xi_at(k - 1) - dist.xi_at(k)) * rate_w(k, state, p);
    }
    const double w_m = rate_w(m, state, p);

    SojournPaper s;
    s.es_w = working * mu / lambda;
    s.es_v = dormant * mu / (mu - lambda) + m * mu * mu * dist.xi_at(m - 1) * w_m / (mu - lambda);
    s.es = working + dormant + m * mu * dist.xi_at(m - 1) * w_m;
    s.flags.push_back(kVerbatimFlag);
    return s;
}

double sojourn_little(const fixedpoint::StationaryDistribution& dist) {
    return queue_lengths(dist).eq / dist.params.lambda;
}

double energy_saving(const fixedpoint::StationaryDistribution& dist) { return dist.xi_at(0); }

PerformanceReport performance(const fixedpoint::StationaryDistribution& dist) {
    PerformanceReport r;
    r.params = dist.params;
    const auto q = queue_lengths(dist);
    r.eq_w = q.eq_w;
    r.eq_d = q.eq_d;
    r.eq = q.eq;
    const auto s = sojourn_paper(dist);
    r.es_w = s.es_w;
    r.es_v = s.es_v;
    r.es_paper = s.es;
    r.es_little = q.eq / dist.params.lambda;
    r.energy_saving = energy_saving(dist);
    r.flags = s.flags;
    return r;
}

PerformanceReport performance(const sim::SimReport& report) {
    PerformanceReport r;
    r.params = report.params;
    for (double u : report.u_hat) r.eq_w += u;
    for (std::size_t j = 1; j < report.v_hat.size(); ++j) r.eq_d += report.v_hat[j];
    r.eq = report.eq_mean.mean;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.es_w = nan;
    r.es_v = nan;
    r.es_paper = nan;
    r.es_little = r.eq / report.params.lambda;
    r.energy_saving = report.dormant_fraction.mean;
    return r;
}

ThresholdSearch optimal_threshold(const ModelParams& params, double bound, Criterion criterion, int m_max,
                                  const fixedpoint::SolverOptions& options) {
    require_stable(ModelParams{params.lambda, params.mu, params.d, 2});
    if (m_max < 2) throw Error(Errc::invalid_params, "m_max must be at least 2");

    std::map<int, double> cache;
    auto value = [&](int m) {
        if (auto it = cache.find(m); it != cache.end()) return it->second;
        ModelParams pm = params;
        pm.m = m;
        const auto dist = fixedpoint::solve(pm, options);
        const auto q = queue_lengths(dist);
        const double v = criterion == Criterion::eq ? q.eq : q.eq / pm.lambda;
        cache.emplace(m, v);
        return v;
    };

    ThresholdSearch out;
    const double at_two = value(2);
    if (at_two > bound)
        throw Error(Errc::bound_infeasible,
                    "criterion at M = 2 is " + std::to_string(at_two) + ", above the bound " + std::to_string(bound));

    if (value(m_max) >= at_two) {
        if (value(m_max) <= bound) {
            out.m_star = m_max;
        } else {
            int lo = 2;      // satisfies the bound
            int hi = m_max;  // violates it
            while (hi - lo > 1) {
                const int mid = lo + (hi - lo) / 2;
                (value(mid) <= bound ? lo : hi) = mid;
            }
            out.m_star = lo;
        }
    } else {
        out.linear_fallback = true;
        out.m_star = 2;
        for (int m = 3; m <= m_max; ++m) {
            if (value(m) <= bound) out.m_star = m;
        }
    }
    out.evaluated.assign(cache.begin(), cache.end());
    return out;
}

}  // namespace threshold_lab::metrics
