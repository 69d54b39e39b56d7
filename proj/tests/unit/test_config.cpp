#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "threshold_lab/config.hpp"

using namespace threshold_lab;
using config::RunConfig;

TEST_CASE("defaults") {
    RunConfig c;
    CHECK(c.params.lambda == 0.39);
    CHECK(c.params.mu == 1.0);
    CHECK(c.params.d == 2);
    CHECK(c.params.m == 2);
    CHECK_NOTHROW(config::validate(c));
}

TEST_CASE("file values, comments and flag precedence") {
    RunConfig c;
    config::apply_text(c, "# farm\nlambda = 0.39\n  d=3   # sample size\n\nn_servers = 50\n");
    CHECK(c.params.lambda == 0.39);
    CHECK(c.params.d == 3);
    CHECK(c.sim.n_servers == 50);
    config::apply(c, "lambda", "0.5");
    CHECK(c.params.lambda == 0.5);
    config::apply(c, "n-servers", "7");
    CHECK(c.sim.n_servers == 7);
}

TEST_CASE("config file on disk") {
    const std::string path = "threshold_lab_test_config.txt";
    {
        std::ofstream out(path);
        out << "m = 4\nvalues = 0.1:0.3:0.1\n";
    }
    RunConfig c;
    config::apply_file(c, path);
    std::remove(path.c_str());
    CHECK(c.params.m == 4);
    CHECK(c.values.size() == 3);
    CHECK_THROWS_AS(config::apply_file(c, "does-not-exist.cfg"), Error);
}

TEST_CASE("errors name the key") {
    RunConfig c;
    try {
        config::apply_text(c, "lambda = 0.3\nwarp = 9\n");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::invalid_config);
        CHECK(std::string(e.what()).find("warp") != std::string::npos);
    }
    try {
        config::apply(c, "d", "two");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("d") != std::string::npos);
    }
    CHECK_THROWS_AS(config::apply_text(c, "just words\n"), Error);
    config::apply(c, "m", "0");
    CHECK_THROWS_AS(config::validate(c), Error);
}

TEST_CASE("sweep parameter names") {
    RunConfig c;
    c.param = "lambda";
    CHECK_NOTHROW(config::validate(c));
    c.param = "n_servers";
    CHECK_NOTHROW(config::validate(c));
    c.param = "seed";
    CHECK_THROWS_AS(config::validate(c), Error);
}

TEST_CASE("range syntax includes the endpoint within half a step") {
    const auto a = config::parse_values("0.09:0.99:0.09");
    REQUIRE(a.size() == 11);
    CHECK(a.front() == 0.09);
    CHECK(a.back() == doctest::Approx(0.99));
    const auto b = config::parse_values("0.09:0.99:0.05");
    CHECK(b.size() == 19);
    CHECK(b.back() == doctest::Approx(0.99));
    CHECK(config::parse_values("1:1:1").size() == 1);
    CHECK(config::parse_values("20,50,100").size() == 3);
    CHECK_THROWS_AS(config::parse_values("1:0:1"), Error);
    CHECK_THROWS_AS(config::parse_values("0:1:0"), Error);
    CHECK_THROWS_AS(config::parse_values("0:1"), Error);
}

TEST_CASE("exit codes") {
    CHECK(config::exit_code(Errc::invalid_config) == 2);
    CHECK(config::exit_code(Errc::unstable) == 2);
    CHECK(config::exit_code(Errc::no_root) == 3);
    CHECK(config::exit_code(Errc::queue_cap_exceeded) == 4);
}
