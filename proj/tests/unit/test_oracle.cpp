#include "doctest.h"

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <random>

#include "support.hpp"
#include "threshold_lab/meanfield.hpp"
#include "threshold_lab/oracle.hpp"

using namespace threshold_lab;
using Rational = boost::multiprecision::cpp_rational;

TEST_CASE("npolicy_mm1 examples") {
    CHECK(oracle::npolicy_mm1({0.5, 1.0, 1, 2}).eq == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(oracle::npolicy_mm1({0.5, 1.0, 1, 1}).eq == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(oracle::npolicy_mm1({0.9, 1.0, 1, 5}).eq == doctest::Approx(11.0).epsilon(1e-12));
    for (double lambda : {0.1, 0.3, 0.5, 0.9, 0.97}) {
        for (int m : {1, 2, 3, 5, 8}) {
            const auto r = oracle::npolicy_mm1({lambda, 1.0, 1, m});
            CHECK(r.verification_error < 1e-8);
        }
    }
    CHECK_THROWS_AS(oracle::npolicy_mm1({1.0, 1.0, 1, 2}), Error);
    CHECK_THROWS_AS(oracle::npolicy_mm1({0.5, 1.0, 2, 2}), Error);
}

TEST_CASE("CTMC with one server matches the N-policy distribution") {
    const ModelParams p{0.5, 1.0, 1, 2};
    const auto mm1 = oracle::npolicy_mm1(p);
    const auto ctmc = oracle::ctmc_exact_small_n(p, 1, 60);
    CHECK(ctmc.pi[0] == doctest::Approx(mm1.p_dormant[0]).epsilon(1e-10));
    CHECK(ctmc.pi[1] == doctest::Approx(mm1.p_dormant[1]).epsilon(1e-10));
    for (int q = 1; q <= 20; ++q)
        CHECK(std::abs(ctmc.pi[static_cast<std::size_t>(1 + q)] - mm1.p_working[static_cast<std::size_t>(q - 1)]) < 1e-8);
}

TEST_CASE("CTMC invariants") {
    const auto s = oracle::ctmc_exact_small_n({0.39, 1.0, 2, 2}, 2, 25);
    double total = 0.0;
    for (double p : s.pi) {
        CHECK(p >= 0.0);
        total += p;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(std::abs(s.total_mass - 1.0) < 1e-12);
    CHECK(s.residual < 1e-10);
    CHECK(s.tail_mass < 1e-8);
    CHECK(std::abs(s.u[0] + s.v[0] - 1.0) < 1e-12);
    CHECK(s.v[0] == doctest::Approx(0.61).epsilon(1e-9));
    CHECK(s.pi.size() == 27 * 27);
}

TEST_CASE("CTMC at vanishing load") {
    // Without a threshold the farm is empty almost surely.
    const auto s = oracle::ctmc_exact_small_n({1e-9, 1.0, 2, 1}, 2, 4);
    CHECK(s.pi[0] == doctest::Approx(1.0).epsilon(1e-8));
    // With M = 2 a dormant server keeps its single task until the next arrival, so the
    // mass splits evenly over the dormant levels.
    const auto t = oracle::ctmc_exact_small_n({1e-9, 1.0, 1, 2}, 1, 4);
    CHECK(t.pi[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(t.pi[1] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("CTMC guards") {
    CHECK_THROWS_AS(oracle::ctmc_exact_small_n({0.5, 1.0, 2, 2}, 6, 30), Error);
    try {
        oracle::ctmc_exact_small_n({0.9, 1.0, 1, 2}, 1, 5);
        FAIL("expected truncation error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::truncation_mass_too_high);
    }
}

TEST_CASE("supermarket_m1 tail") {
    const auto t = oracle::supermarket_m1({0.5, 1.0, 2, 1});
    CHECK(t[0] == 0.5);
    CHECK(t[1] == 0.125);
    CHECK(t[2] == std::pow(0.5, 7));
    for (std::size_t k = 1; k < t.size(); ++k) CHECK(t[k] == doctest::Approx(0.5 * t[k - 1] * t[k - 1]).epsilon(1e-12));
    const auto g = oracle::supermarket_m1({0.3, 1.0, 1, 1}, 1e-10);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(g[k] == doctest::Approx(std::pow(0.3, k + 1)).epsilon(1e-12));
    const auto ode = meanfield::steady_state({0.5, 1.0, 2, 1}, 1e-11);
    for (int k = 1; k <= 4; ++k) CHECK(std::abs(ode.state.u(k) - t[static_cast<std::size_t>(k - 1)]) < 1e-8);
}

TEST_CASE("enumeration: trivial populations") {
    oracle::Population all_same;
    all_same.working = {0, 0, 0, 50};
    all_same.dormant = {0, 0};
    CHECK(oracle::enumerate_sampling_probability(all_same, 3, 4, Mode::working, Sampling::without_replacement,
                                                 TieBreak::uniform) == doctest::Approx(1.0));

    oracle::Population mixed;
    mixed.working = {0, 3, 5, 2};
    mixed.dormant = {4, 6};
    const double n = 20.0;
    for (int k = 1; k <= 4; ++k) {
        CHECK(oracle::enumerate_sampling_probability(mixed, 1, k, Mode::working, Sampling::without_replacement,
                                                     TieBreak::uniform) ==
              doctest::Approx((k - 1 >= 1 ? mixed.working[static_cast<std::size_t>(k - 1)] : 0) / n));
    }
}

TEST_CASE("enumeration sums to exactly one") {
    oracle::Population pop;
    pop.working = {0, 3, 5, 2, 1};
    pop.dormant = {4, 6, 1};
    for (int d : {1, 2, 3, 4}) {
        for (auto sampling : {Sampling::without_replacement, Sampling::with_replacement}) {
            for (auto tie : {TieBreak::uniform, TieBreak::prefer_working}) {
                Rational total = 0;
                for (int k = 1; k <= 6; ++k) {
                    total += oracle::enumerate_sampling_probability<Rational>(pop, d, k, Mode::working, sampling, tie);
                    total += oracle::enumerate_sampling_probability<Rational>(pop, d, k, Mode::dormant, sampling, tie);
                }
                CHECK(total == Rational(1));
            }
        }
    }
}

TEST_CASE("enumeration divided by the level gap approaches W_k") {
    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 3; ++trial) {
        const int m = 3;
        const ModelParams p{0.5, 1.0, 2, m};
        const auto pop = oracle::synthesize_population(support::random_state(gen, m, 8), 10000);
        CHECK(pop.total() == 10000);
        const auto s = oracle::population_state(pop, m);
        for (int k = 2; k <= 9; ++k) {
            const double gap = s.u(k - 1) - s.u(k);
            if (gap <= 0.0) continue;
            const double prob = oracle::enumerate_sampling_probability(pop, p.d, k, Mode::working,
                                                                       Sampling::without_replacement, TieBreak::uniform);
            CHECK(std::abs(prob / gap - rate_w(k, s, p)) < 1e-3);
        }
    }
}
