#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "threshold_lab/fixedpoint.hpp"
#include "threshold_lab/io.hpp"
#include "threshold_lab/metrics.hpp"
#include "threshold_lab/oracle.hpp"
#include "threshold_lab/simulator.hpp"

using namespace threshold_lab;

namespace {
sim::SimConfig small_config(int n, std::uint64_t seed) {
    sim::SimConfig c;
    c.n_servers = n;
    c.seed = seed;
    c.t_warmup = 50.0;
    c.t_measure = 2e5 / (n * 0.39);
    return c;
}
}  // namespace

TEST_CASE("sample_servers draws distinct indices") {
    Philox4x32 rng(1, 0);
    std::vector<int> out;
    for (int i = 0; i < 1000; ++i) {
        sim::sample_servers(rng, 10, 4, Sampling::without_replacement, out);
        CHECK(out.size() == 4);
        CHECK(std::set<int>(out.begin(), out.end()).size() == 4);
        for (int x : out) CHECK((x >= 0 && x < 10));
    }
    sim::sample_servers(rng, 5, 5, Sampling::without_replacement, out);
    CHECK(std::set<int>(out.begin(), out.end()) == std::set<int>{0, 1, 2, 3, 4});
    CHECK_THROWS_AS(sim::sample_servers(rng, 3, 4, Sampling::without_replacement, out), Error);
    CHECK_NOTHROW(sim::sample_servers(rng, 3, 4, Sampling::with_replacement, out));
}

TEST_CASE("sample_servers is uniform over pairs") {
    Philox4x32 rng(2, 0);
    std::vector<int> out;
    std::vector<int> counts(10, 0);
    const int n = 300000;
    for (int i = 0; i < n; ++i) {
        sim::sample_servers(rng, 5, 2, Sampling::without_replacement, out);
        const int a = std::min(out[0], out[1]);
        const int b = std::max(out[0], out[1]);
        ++counts[static_cast<std::size_t>(a * 5 + b - (a + 1) * (a + 2) / 2)];
    }
    for (int c : counts) CHECK(std::abs(c - n / 10.0) < 5 * std::sqrt(n * 0.1 * 0.9));
}

TEST_CASE("dispatch join frequencies match exact enumeration") {
    // Frozen population of N = 8 servers.
    const std::vector<ServerState> servers{{0, Mode::dormant}, {1, Mode::dormant}, {1, Mode::working},
                                           {1, Mode::working}, {2, Mode::working}, {0, Mode::dormant},
                                           {3, Mode::working}, {1, Mode::dormant}};
    oracle::Population pop;
    pop.working.assign(4, 0);
    pop.dormant.assign(2, 0);
    for (const auto& s : servers) {
        if (s.mode == Mode::working) {
            ++pop.working[static_cast<std::size_t>(s.queue_length)];
        } else {
            ++pop.dormant[static_cast<std::size_t>(s.queue_length)];
        }
    }
    for (auto tie : {TieBreak::uniform, TieBreak::prefer_working}) {
        for (auto sampling : {Sampling::without_replacement, Sampling::with_replacement}) {
            const int d = 3;
            Philox4x32 rng(5, 0);
            std::vector<int> idx;
            std::vector<ServerState> sampled;
            std::vector<int> cand;
            std::vector<double> hits_w(5, 0.0);
            std::vector<double> hits_d(5, 0.0);
            const int n = 1'000'000;
            for (int i = 0; i < n; ++i) {
                sim::sample_servers(rng, 8, d, sampling, idx);
                sampled.clear();
                for (int j : idx) sampled.push_back(servers[static_cast<std::size_t>(j)]);
                dispatch_candidates(sampled, tie, cand);
                const auto& s = sampled[static_cast<std::size_t>(cand[rng.below(cand.size())])];
                (s.mode == Mode::working ? hits_w : hits_d)[static_cast<std::size_t>(s.queue_length)] += 1.0;
            }
            for (int level = 0; level < 4; ++level) {
                for (auto mode : {Mode::working, Mode::dormant}) {
                    const double p = oracle::enumerate_sampling_probability(pop, d, level + 1, mode, sampling, tie);
                    const double f = (mode == Mode::working ? hits_w : hits_d)[static_cast<std::size_t>(level)] / n;
                    const double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
                    CHECK(std::abs(f - p) <= 3 * sigma + 1e-12);
                }
            }
        }
    }
}

TEST_CASE("no arrivals leaves every server dormant and empty") {
    sim::SimConfig c;
    c.n_servers = 10;
    c.t_warmup = 1.0;
    c.t_measure = 10.0;
    const auto r = sim::run_replication({1e-12, 1.0, 2, 2}, c);
    CHECK(r.eq_mean.mean == 0.0);
    CHECK(r.eq_mean.half_width == 0.0);
    CHECK(r.dormant_fraction.mean == 1.0);
}

TEST_CASE("same seed gives bit-identical reports") {
    const ModelParams p{0.6, 1.0, 2, 3};
    const auto c = small_config(20, 9);
    const auto a = io::to_json(sim::run_replication(p, c)).dump();
    const auto b = io::to_json(sim::run_replication(p, c)).dump();
    CHECK(a == b);
    auto c2 = c;
    c2.seed = 10;
    CHECK(io::to_json(sim::run_replication(p, c2)).dump() != a);
}

TEST_CASE("single replication ensemble equals run_replication") {
    const ModelParams p{0.5, 1.0, 2, 2};
    const auto c = small_config(10, 4);
    CHECK(io::to_json(sim::run_ensemble(p, c)).dump() == io::to_json(sim::run_replication(p, c, 0)).dump());
}

TEST_CASE("pooled mean is the average of replication means") {
    const ModelParams p{0.5, 1.0, 2, 2};
    auto c = small_config(10, 4);
    c.n_replications = 4;
    const auto pooled = sim::run_ensemble(p, c);
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) sum += sim::run_replication(p, c, i).eq_mean.mean;
    CHECK(std::abs(pooled.eq_mean.mean - sum / 4) < 1e-15);
    CHECK(pooled.eq_mean.samples == 4);
    CHECK(pooled.replications == 4);
}

TEST_CASE("conservation, Little's law and flow balance") {
    for (int m : {1, 2, 4}) {
        const ModelParams p{0.7, 1.0, 2, m};
        const auto c = small_config(50, 21);
        const auto r = sim::run_replication(p, c);
        CHECK(std::abs(r.u_hat[0] + r.v_hat[0] - 1.0) < 1e-12);
        for (std::size_t k = 1; k < r.u_hat.size(); ++k) CHECK(r.u_hat[k] <= r.u_hat[k - 1] + 1e-12);
        const double little = r.es_mean.mean * p.lambda;
        const double tol = p.lambda * r.es_mean.half_width + r.eq_mean.half_width;
        CHECK(std::abs(little - r.eq_mean.mean) <= tol);
        const double throughput = r.tasks_completed / (c.n_servers * *r.config.t_measure);
        CHECK(std::abs(throughput - p.lambda) < 0.01);
    }
}

TEST_CASE("queue cap guard") {
    sim::SimConfig c = small_config(5, 1);
    c.queue_cap = 3;
    try {
        sim::run_replication({0.99, 1.0, 1, 2}, c);
        FAIL("expected the guard to trip");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::queue_cap_exceeded);
    }
}

TEST_CASE("replication errors name the replication") {
    sim::SimConfig c = small_config(5, 1);
    c.queue_cap = 2;
    c.n_replications = 3;
    try {
        sim::run_ensemble({0.99, 1.0, 1, 2}, c);
        FAIL("expected the guard to trip");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::queue_cap_exceeded);
        CHECK(std::string(e.what()).find("replication 0") != std::string::npos);
    }
}

TEST_CASE("d larger than N is rejected") {
    CHECK_THROWS_AS(sim::run_replication({0.5, 1.0, 3, 2}, small_config(2, 1)), Error);
}

TEST_CASE("batch csv") {
    const auto r = sim::run_replication({0.5, 1.0, 2, 2}, small_config(10, 2));
    std::ostringstream os;
    sim::write_batches_csv(os, r);
    const auto text = os.str();
    CHECK(text.rfind("batch_index,eq,es,v0\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 21);
}

TEST_CASE("large N tracks the fixed point") {
    const ModelParams p{0.39, 1.0, 2, 2};
    sim::SimConfig c;
    c.n_servers = 200;
    c.seed = 8;
    const auto r = sim::run_replication(p, c);
    const double eq = metrics::queue_lengths(fixedpoint::solve(p)).eq;
    CHECK(std::abs(r.eq_mean.mean - eq) / eq < 0.01);
    CHECK(std::abs(r.dormant_fraction.mean - 0.61) < 0.01);
}
