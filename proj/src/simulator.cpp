#include "threshold_lab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <ostream>
#include <string>

#include "threshold_lab/parallel.hpp"

namespace threshold_lab::sim {
namespace {

// Population count at one level with a lazily accumulated time integral.
struct Level {
    long long count = 0;
    double last = 0.0;
    double area = 0.0;

    void flush(double t) {
        area += static_cast<double>(count) * (t - last);
        last = t;
    }
    void add(double t, long long delta) {
        flush(t);
        count += delta;
    }
};

struct Resolved {
    double warmup;
    double measure;
};

Resolved resolve(const ModelParams& params, const SimConfig& config) {
    return {config.t_warmup.value_or(default_warmup(params)),
            config.t_measure.value_or(default_measure(params, config.n_servers))};
}

void pad_to(std::vector<double>& v, std::size_t n) {
    if (v.size() < n) v.resize(n, 0.0);
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t i) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(i < r.size() ? r[i] : 0.0);
    return out;
}

}  // namespace

double default_warmup(const ModelParams& params) {
    const double gap = params.mu - params.lambda;
    return gap > 0.0 ? 10.0 / gap : 10.0 / params.mu;
}

double default_measure(const ModelParams& params, int n_servers) {
    return 1e6 / (static_cast<double>(n_servers) * params.lambda);
}

void validate(const SimConfig& config) {
    auto fail = [](const std::string& what) { throw Error(Errc::invalid_config, what); };
    if (config.n_servers < 1) fail("n_servers must be at least 1");
    if (config.n_batches < 2) fail("n_batches must be at least 2");
    if (config.n_replications < 1) fail("n_replications must be at least 1");
    if (config.t_warmup && !(*config.t_warmup >= 0.0 && std::isfinite(*config.t_warmup)))
        fail("t_warmup must be finite and non-negative");
    if (config.t_measure && !(*config.t_measure > 0.0 && std::isfinite(*config.t_measure)))
        fail("t_measure must be finite and positive");
    if (config.queue_cap && *config.queue_cap < 1) fail("queue_cap must be at least 1");
}

FractionState SimReport::state() const {
    return FractionState::unchecked(u_hat, v_hat);
}

void sample_servers(Philox4x32& rng, int n_servers, int d, Sampling sampling, std::vector<int>& out) {
    out.clear();
    if (sampling == Sampling::with_replacement) {
        for (int i = 0; i < d; ++i) out.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(n_servers))));
        return;
    }
    if (d > n_servers)
        throw Error(Errc::d_exceeds_n,
                    "d = " + std::to_string(d) + " exceeds N = " + std::to_string(n_servers));
    // Floyd's algorithm: exactly d draws, uniform over d-subsets.
    for (int j = n_servers - d; j < n_servers; ++j) {
        const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(j) + 1));
        if (std::find(out.begin(), out.end(), t) == out.end()) {
            out.push_back(t);
        } else {
            out.push_back(j);
        }
    }
}

SimReport run_replication(const ModelParams& params_in, const SimConfig& config, int replication_index) {
    const ModelParams params = validate(params_in);
    validate(config);
    const int n = config.n_servers;
    const int m = params.m;
    if (config.sampling == Sampling::without_replacement && params.d > n)
        throw Error(Errc::d_exceeds_n,
                    "d = " + std::to_string(params.d) + " exceeds N = " + std::to_string(n));

    const Resolved span = resolve(params, config);
    const int n_batches = config.n_batches;
    const double batch_len = span.measure / n_batches;
    const double t_end = span.warmup + span.measure;

    Philox4x32 rng(config.seed, static_cast<std::uint64_t>(replication_index));

    std::vector<ServerState> servers(static_cast<std::size_t>(n));
    std::vector<std::deque<double>> stamps(static_cast<std::size_t>(n));
    std::vector<int> working;
    std::vector<int> position(static_cast<std::size_t>(n), -1);

    // levels_w[k]: working with >= k tasks (k >= 1); levels_v[j]: dormant with >= j tasks.
    std::vector<Level> levels_w(2);
    std::vector<Level> levels_v(static_cast<std::size_t>(m));
    levels_v[0].count = n;
    Level total;

    std::vector<std::vector<double>> batch_u;
    std::vector<std::vector<double>> batch_v;
    std::vector<BatchRow> rows;
    double sojourn_sum = 0.0;
    long long sojourn_count = 0;
    long long completed = 0;
    long long arrivals = 0;

    int boundary = 0;  // 0 closes the warm-up, i >= 1 closes batch i - 1
    auto boundary_time = [&](int b) { return b == n_batches ? t_end : span.warmup + b * batch_len; };

    auto close_boundary = [&](double tb) {
        for (auto& l : levels_w) l.flush(tb);
        for (auto& l : levels_v) l.flush(tb);
        total.flush(tb);
        if (boundary > 0) {
            const double scale = 1.0 / (static_cast<double>(n) * batch_len);
            std::vector<double> u;
            for (std::size_t k = 1; k < levels_w.size(); ++k) u.push_back(levels_w[k].area * scale);
            while (!u.empty() && u.back() == 0.0) u.pop_back();
            std::vector<double> v;
            for (auto& l : levels_v) v.push_back(l.area * scale);
            BatchRow row;
            row.batch_index = boundary - 1;
            row.eq = total.area * scale;
            row.es = sojourn_count > 0 ? sojourn_sum / static_cast<double>(sojourn_count)
                                       : std::numeric_limits<double>::quiet_NaN();
            row.v0 = v[0];
            rows.push_back(row);
            batch_u.push_back(std::move(u));
            batch_v.push_back(std::move(v));
        }
        for (auto& l : levels_w) l.area = 0.0;
        for (auto& l : levels_v) l.area = 0.0;
        total.area = 0.0;
        sojourn_sum = 0.0;
        sojourn_count = 0;
        ++boundary;
    };

    std::vector<int> sampled_idx;
    std::vector<ServerState> sampled;
    std::vector<int> candidates;
    const double arrival_rate = static_cast<double>(n) * params.lambda;
    double t = 0.0;

    while (true) {
        const double rate = arrival_rate + params.mu * static_cast<double>(working.size());
        const double t_next = t + rng.exponential(rate);
        while (boundary <= n_batches && t_next >= boundary_time(boundary)) close_boundary(boundary_time(boundary));
        if (boundary > n_batches) break;
        t = t_next;

        if (rng.uniform01() * rate < arrival_rate) {
            if (boundary > 0) ++arrivals;
            sample_servers(rng, n, params.d, config.sampling, sampled_idx);
            sampled.clear();
            for (int i : sampled_idx) sampled.push_back(servers[static_cast<std::size_t>(i)]);
            dispatch_candidates(sampled, config.tie_break, candidates);
            const int pick = candidates.size() == 1
                                 ? candidates[0]
                                 : candidates[static_cast<std::size_t>(rng.below(candidates.size()))];
            const int id = sampled_idx[static_cast<std::size_t>(pick)];
            auto& s = servers[static_cast<std::size_t>(id)];
            const ServerState old = s;
            s = after_arrival(old, m);
            if (config.queue_cap && s.queue_length > *config.queue_cap)
                throw Error(Errc::queue_cap_exceeded, "server " + std::to_string(id) + " reached " +
                                                          std::to_string(s.queue_length) + " tasks at t = " +
                                                          std::to_string(t));
            stamps[static_cast<std::size_t>(id)].push_back(t);
            total.add(t, 1);
            if (static_cast<std::size_t>(s.queue_length) >= levels_w.size()) {
                levels_w.resize(static_cast<std::size_t>(s.queue_length) + 1);
                levels_w.back().last = t;
            }
            if (old.mode == Mode::working) {
                levels_w[static_cast<std::size_t>(s.queue_length)].add(t, 1);
            } else if (s.mode == Mode::dormant) {
                levels_v[static_cast<std::size_t>(s.queue_length)].add(t, 1);
            } else {
                for (auto& l : levels_v) l.add(t, -1);
                for (int k = 1; k <= s.queue_length; ++k) levels_w[static_cast<std::size_t>(k)].add(t, 1);
                position[static_cast<std::size_t>(id)] = static_cast<int>(working.size());
                working.push_back(id);
            }
        } else {
            const auto slot = static_cast<std::size_t>(rng.below(working.size()));
            const int id = working[slot];
            auto& s = servers[static_cast<std::size_t>(id)];
            levels_w[static_cast<std::size_t>(s.queue_length)].add(t, -1);
            s = after_completion(s);
            if (s.mode == Mode::dormant) {
                levels_v[0].add(t, 1);
                const int moved = working.back();
                working[slot] = moved;
                position[static_cast<std::size_t>(moved)] = static_cast<int>(slot);
                working.pop_back();
                position[static_cast<std::size_t>(id)] = -1;
            }
            auto& q = stamps[static_cast<std::size_t>(id)];
            const double sojourn = t - q.front();
            q.pop_front();
            total.add(t, -1);
            if (boundary > 0) {
                sojourn_sum += sojourn;
                ++sojourn_count;
                ++completed;
            }
        }
    }

    SimReport report;
    report.params = params;
    report.config = config;
    report.config.t_warmup = span.warmup;
    report.config.t_measure = span.measure;
    report.config.n_replications = 1;
    report.tasks_completed = completed;
    report.arrivals = arrivals;
    report.unstable = !params.stable();
    report.batches = rows;

    std::size_t k_max = 0;
    for (const auto& u : batch_u) k_max = std::max(k_max, u.size());
    for (std::size_t k = 0; k < k_max; ++k) {
        const auto est = mean_ci(column(batch_u, k));
        report.u_hat.push_back(est.mean);
        report.u_half_width.push_back(est.half_width);
    }
    for (std::size_t j = 0; j < static_cast<std::size_t>(m); ++j) {
        const auto est = mean_ci(column(batch_v, j));
        report.v_hat.push_back(est.mean);
        report.v_half_width.push_back(est.half_width);
    }
    std::vector<double> eq, es, v0;
    for (const auto& r : rows) {
        eq.push_back(r.eq);
        es.push_back(r.es);
        v0.push_back(r.v0);
    }
    report.eq_mean = mean_ci(eq);
    report.es_mean = mean_ci(es);
    report.dormant_fraction = mean_ci(v0);
    return report;
}

SimReport run_ensemble(const ModelParams& params, const SimConfig& config) {
    validate(config);
    const int r = config.n_replications;
    std::vector<SimReport> reps(static_cast<std::size_t>(r));
    parallel_for(r, [&](int i) {
        try {
            reps[static_cast<std::size_t>(i)] = run_replication(params, config, i);
        } catch (const Error& e) {
            throw Error(e.code(), "replication " + std::to_string(i) + ": " + e.what());
        }
    });
    if (r == 1) return reps[0];

    SimReport out;
    out.params = reps[0].params;
    out.config = reps[0].config;
    out.config.n_replications = r;
    out.replications = r;
    out.unstable = reps[0].unstable;

    std::vector<std::vector<double>> us, vs;
    std::vector<double> eq, es, v0;
    std::size_t k_max = 0;
    for (const auto& rep : reps) {
        k_max = std::max(k_max, rep.u_hat.size());
        us.push_back(rep.u_hat);
        vs.push_back(rep.v_hat);
        eq.push_back(rep.eq_mean.mean);
        es.push_back(rep.es_mean.mean);
        v0.push_back(rep.dormant_fraction.mean);
        out.tasks_completed += rep.tasks_completed;
        out.arrivals += rep.arrivals;
        for (auto row : rep.batches) {
            row.batch_index = static_cast<int>(out.batches.size());
            out.batches.push_back(row);
        }
    }
    for (auto& u : us) pad_to(u, k_max);
    for (std::size_t k = 0; k < k_max; ++k) {
        const auto est = mean_ci(column(us, k));
        out.u_hat.push_back(est.mean);
        out.u_half_width.push_back(est.half_width);
    }
    for (std::size_t j = 0; j < static_cast<std::size_t>(out.params.m); ++j) {
        const auto est = mean_ci(column(vs, j));
        out.v_hat.push_back(est.mean);
        out.v_half_width.push_back(est.half_width);
    }
    out.eq_mean = mean_ci(eq);
    out.es_mean = mean_ci(es);
    out.dormant_fraction = mean_ci(v0);
    return out;
}

void write_batches_csv(std::ostream& os, const SimReport& report) {
    char buf[128];
    os << "batch_index,eq,es,v0\n";
    for (const auto& row : report.batches) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", row.batch_index, row.eq, row.es, row.v0);
        os << buf;
    }
}

}  // namespace threshold_lab::sim
