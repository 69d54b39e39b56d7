#include "threshold_lab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace threshold_lab::config {
namespace {

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
    throw Error(Errc::invalid_config,
                "invalid value '" + std::string(value) + "' for " + std::string(key) + ": " + std::string(why));
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double to_double(std::string_view key, std::string_view text) {
    text = trim(text);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(x)) bad(key, text, "expected a number");
    return x;
}

long long to_integer(std::string_view key, std::string_view text) {
    text = trim(text);
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
    if (ec != std::errc() || ptr != text.data() + text.size()) bad(key, text, "expected an integer");
    return x;
}

int to_int(std::string_view key, std::string_view text) {
    const long long x = to_integer(key, text);
    if (x < -2147483647LL || x > 2147483647LL) bad(key, text, "out of range");
    return static_cast<int>(x);
}

bool to_bool(std::string_view key, std::string_view text) {
    text = trim(text);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    bad(key, text, "expected true or false");
}

std::string normalize(std::string_view key) {
    std::string k(trim(key));
    for (auto& c : k) {
        if (c == '-') c = '_';
    }
    return k;
}

}  // namespace

fixedpoint::SolverOptions RunConfig::solver_options() const {
    fixedpoint::SolverOptions o;
    o.inner_tol = tol_fixedpoint;
    o.outer_tol = tol_fixedpoint;
    o.k_cap = k_max;
    return o;
}

meanfield::SteadyStateOptions RunConfig::steady_state_options() const {
    meanfield::SteadyStateOptions o;
    o.k_cap = k_max;
    return o;
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "lambda",  "mu",         "d",       "m",         "n_servers", "seed",     "t_warmup", "t_measure",
        "n_batches", "n_replications", "queue_cap", "sampling", "tie_break", "k_max",    "tol_ode",
        "tol_fixedpoint", "t_end", "sample_dt", "param", "values", "n", "simulate", "bound", "criterion",
        "m_max",   "out",        "csv"};
    return keys;
}

void apply(RunConfig& c, std::string_view raw_key, std::string_view raw_value) {
    const std::string key = normalize(raw_key);
    const std::string_view value = trim(raw_value);
    if (key == "lambda") {
        c.params.lambda = to_double(key, value);
    } else if (key == "mu") {
        c.params.mu = to_double(key, value);
    } else if (key == "d") {
        c.params.d = to_int(key, value);
    } else if (key == "m") {
        c.params.m = to_int(key, value);
    } else if (key == "n_servers") {
        c.sim.n_servers = to_int(key, value);
    } else if (key == "seed") {
        const long long s = to_integer(key, value);
        if (s < 0) bad(key, value, "seed must be non-negative");
        c.sim.seed = static_cast<std::uint64_t>(s);
    } else if (key == "t_warmup") {
        c.sim.t_warmup = to_double(key, value);
    } else if (key == "t_measure") {
        c.sim.t_measure = to_double(key, value);
    } else if (key == "n_batches") {
        c.sim.n_batches = to_int(key, value);
    } else if (key == "n_replications") {
        c.sim.n_replications = to_int(key, value);
    } else if (key == "queue_cap") {
        c.sim.queue_cap = to_int(key, value);
    } else if (key == "sampling") {
        if (value == "without_replacement" || value == "without") {
            c.sim.sampling = Sampling::without_replacement;
        } else if (value == "with_replacement" || value == "with") {
            c.sim.sampling = Sampling::with_replacement;
        } else {
            bad(key, value, "expected without_replacement or with_replacement");
        }
    } else if (key == "tie_break") {
        if (value == "uniform") {
            c.sim.tie_break = TieBreak::uniform;
        } else if (value == "prefer_working") {
            c.sim.tie_break = TieBreak::prefer_working;
        } else {
            bad(key, value, "expected uniform or prefer_working");
        }
    } else if (key == "k_max") {
        c.k_max = to_int(key, value);
    } else if (key == "tol_ode") {
        c.tol_ode = to_double(key, value);
    } else if (key == "tol_fixedpoint") {
        c.tol_fixedpoint = to_double(key, value);
    } else if (key == "t_end") {
        c.t_end = to_double(key, value);
    } else if (key == "sample_dt") {
        c.sample_dt = to_double(key, value);
    } else if (key == "param") {
        c.param = normalize(value);
    } else if (key == "values") {
        try {
            c.values = parse_values(value);
        } catch (const Error&) {
            bad(key, value, "expected start:stop:step or a comma-separated list");
        }
    } else if (key == "n") {
        c.n_list.clear();
        std::string_view rest = value;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            c.n_list.push_back(to_int(key, rest.substr(0, comma)));
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
        if (c.n_list.empty()) bad(key, value, "expected a comma-separated list of server counts");
    } else if (key == "simulate") {
        c.simulate = to_bool(key, value);
    } else if (key == "bound") {
        c.bound = to_double(key, value);
    } else if (key == "criterion") {
        if (value == "eq" || value == "EQ") {
            c.criterion = metrics::Criterion::eq;
        } else if (value == "es" || value == "ES") {
            c.criterion = metrics::Criterion::es;
        } else {
            bad(key, value, "expected eq or es");
        }
    } else if (key == "m_max") {
        c.m_max = to_int(key, value);
    } else if (key == "out") {
        c.out = std::string(value);
    } else if (key == "csv") {
        c.csv = std::string(value);
    } else {
        throw Error(Errc::invalid_config, "unknown key '" + std::string(raw_key) + "'");
    }
}

void apply_text(RunConfig& c, std::string_view text, const std::string& origin) {
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view body = line;
        if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        body = trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw Error(Errc::invalid_config,
                        origin + ":" + std::to_string(number) + ": expected key = value, got '" + std::string(body) + "'");
        const auto key = trim(body.substr(0, eq));
        try {
            apply(c, key, body.substr(eq + 1));
        } catch (const Error& e) {
            throw Error(Errc::invalid_config, origin + ":" + std::to_string(number) + ": " + e.what());
        }
    }
}

void apply_file(RunConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::invalid_config, "cannot read config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    apply_text(c, text.str(), path);
}

void validate(const RunConfig& c) {
    threshold_lab::validate(c.params);
    sim::validate(c.sim);
    if (c.k_max < c.params.m + 1) throw Error(Errc::invalid_config, "k_max must exceed m");
    if (!(c.tol_ode > 0.0)) throw Error(Errc::invalid_config, "tol_ode must be positive");
    if (c.tol_fixedpoint < 0.0) throw Error(Errc::invalid_config, "tol_fixedpoint must be non-negative");
    if (!(c.t_end > 0.0)) throw Error(Errc::invalid_config, "t_end must be positive");
    if (c.sample_dt < 0.0) throw Error(Errc::invalid_config, "sample_dt must be non-negative");
    if (!c.param.empty() && c.param != "lambda" && c.param != "mu" && c.param != "d" && c.param != "m" &&
        c.param != "n_servers")
        throw Error(Errc::invalid_config, "param must be one of lambda, mu, d, m, n_servers; got '" + c.param + "'");
    for (int n : c.n_list) {
        if (n < 1) throw Error(Errc::invalid_config, "n entries must be at least 1");
    }
    if (c.m_max < 2) throw Error(Errc::invalid_config, "m_max must be at least 2");
}

std::vector<double> parse_values(std::string_view text) {
    text = trim(text);
    std::vector<double> out;
    if (text.find(':') != std::string_view::npos) {
        const auto a = text.find(':');
        const auto b = text.find(':', a + 1);
        if (b == std::string_view::npos || text.find(':', b + 1) != std::string_view::npos)
            throw Error(Errc::invalid_config, "range needs start:stop:step");
        const double start = to_double("values", text.substr(0, a));
        const double stop = to_double("values", text.substr(a + 1, b - a - 1));
        const double step = to_double("values", text.substr(b + 1));
        if (!(step > 0.0) || stop < start) throw Error(Errc::invalid_config, "range needs step > 0 and stop >= start");
        for (long long i = 0;; ++i) {
            const double x = start + static_cast<double>(i) * step;
            if (x > stop + step / 2) break;
            out.push_back(x);
        }
        return out;
    }
    while (!text.empty()) {
        const auto comma = text.find(',');
        out.push_back(to_double("values", text.substr(0, comma)));
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    }
    if (out.empty()) throw Error(Errc::invalid_config, "empty value list");
    return out;
}

int exit_code(Errc code) noexcept {
    switch (code) {
        case Errc::invalid_params:
        case Errc::unstable:
        case Errc::index_out_of_range:
        case Errc::truncation_too_short:
        case Errc::d_exceeds_n:
        case Errc::bound_infeasible:
        case Errc::invalid_config:
        case Errc::state_space_too_large:
            return 2;
        case Errc::invariant_violation:
        case Errc::non_finite:
        case Errc::no_convergence:
        case Errc::no_root:
        case Errc::tail_diverged:
        case Errc::negative_tail:
        case Errc::truncation_mass_too_high:
            return 3;
        case Errc::queue_cap_exceeded:
            return 4;
    }
    return 3;
}

}  // namespace threshold_lab::config
