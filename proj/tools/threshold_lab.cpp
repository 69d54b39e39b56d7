#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "threshold_lab/config.hpp"
#include "threshold_lab/fixedpoint.hpp"
#include "threshold_lab/io.hpp"
#include "threshold_lab/meanfield.hpp"
#include "threshold_lab/metrics.hpp"
#include "threshold_lab/parallel.hpp"
#include "threshold_lab/simulator.hpp"

namespace tl = threshold_lab;
using tl::config::RunConfig;
using tl::io::csv_number;

namespace {

void emit(const std::string& path, const std::function<void(std::ostream&)>& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw tl::Error(tl::Errc::invalid_config, "cannot write '" + path + "'");
    write(out);
}

void emit_json(const std::string& path, const tl::io::Json& json) {
    emit(path, [&](std::ostream& os) { os << json.dump(2) << '\n'; });
}

int run_solve(const RunConfig& c) {
    const auto dist = tl::fixedpoint::solve(c.params, c.solver_options());
    tl::io::Json j;
    j["fixed_point"] = tl::io::to_json(dist);
    j["performance"] = tl::io::to_json(tl::metrics::performance(dist));
    emit_json(c.out, j);
    return 0;
}

int run_ode(const RunConfig& c) {
    const auto initial = tl::FractionState::empty(c.params.m, std::max(16, c.params.m + 1));
    tl::meanfield::IntegrateOptions opts;
    opts.sample_dt = c.sample_dt;
    const auto traj = tl::meanfield::integrate(initial, c.params, c.t_end, c.tol_ode, opts);
    emit(c.out.empty() ? c.csv : c.out, [&](std::ostream& os) { tl::meanfield::write_trajectory_csv(os, traj); });
    return 0;
}

int run_simulate(const RunConfig& c) {
    const auto report = tl::sim::run_ensemble(c.params, c.sim);
    auto j = tl::io::to_json(report);
    j["performance"] = tl::io::to_json(tl::metrics::performance(report));
    emit_json(c.out, j);
    if (!c.csv.empty()) emit(c.csv, [&](std::ostream& os) { tl::sim::write_batches_csv(os, report); });
    return 0;
}

int run_compare(const RunConfig& c) {
    const auto dist = tl::fixedpoint::solve(c.params, c.solver_options());
    const double eq_mf = tl::metrics::queue_lengths(dist).eq;
    const auto fixed = dist.to_state();
    std::ostringstream os;
    os << "n_servers,eq_meanfield,eq_sim,eq_sim_half_width,rel_error,omega_distance\n";
    for (int n : c.n_list) {
        auto sc = c.sim;
        sc.n_servers = n;
        const auto rep = tl::sim::run_ensemble(c.params, sc);
        const double dist_omega = tl::omega_distance(rep.state(), fixed).value;
        os << n << ',' << csv_number(eq_mf) << ',' << csv_number(rep.eq_mean.mean) << ','
           << csv_number(rep.eq_mean.half_width) << ',' << csv_number(std::abs(rep.eq_mean.mean - eq_mf) / eq_mf) << ','
           << csv_number(dist_omega) << '\n';
    }
    emit(c.out.empty() ? c.csv : c.out, [&](std::ostream& out) { out << os.str(); });
    return 0;
}

struct SweepRow {
    std::string cells;
    std::string failure;
    int code = 0;
};

int run_sweep(const RunConfig& c) {
    if (c.param.empty()) throw tl::Error(tl::Errc::invalid_config, "sweep needs --param");
    if (c.values.empty()) throw tl::Error(tl::Errc::invalid_config, "sweep needs --values");
    std::vector<RunConfig> points;
    for (double v : c.values) {
        RunConfig p = c;
        tl::config::apply(p, c.param, csv_number(v));
        tl::config::validate(p);
        points.push_back(p);
    }

    std::vector<SweepRow> rows(points.size());
    tl::parallel_for(static_cast<int>(points.size()), [&](int i) {
        const RunConfig& p = points[static_cast<std::size_t>(i)];
        auto& row = rows[static_cast<std::size_t>(i)];
        std::string cells;
        try {
            const auto perf = tl::metrics::performance(tl::fixedpoint::solve(p.params, p.solver_options()));
            cells = csv_number(perf.eq) + ',' + csv_number(perf.es_paper) + ',' + csv_number(perf.es_little) + ',' +
                    csv_number(perf.energy_saving);
        } catch (const tl::Error& e) {
            cells = ",,,";
            row.failure = e.what();
            row.code = tl::config::exit_code(e.code());
        }
        if (p.simulate) {
            try {
                const auto rep = tl::sim::run_ensemble(p.params, p.sim);
                cells += ',' + csv_number(rep.eq_mean.mean) + ',' + csv_number(rep.eq_mean.half_width) + ',' +
                         csv_number(rep.es_mean.mean) + ',' + csv_number(rep.es_mean.half_width) + ',' +
                         csv_number(rep.dormant_fraction.mean);
            } catch (const tl::Error& e) {
                cells += ",,,,,";
                if (row.failure.empty()) {
                    row.failure = e.what();
                    row.code = tl::config::exit_code(e.code());
                }
            }
        }
        row.cells = cells;
    });

    int code = 0;
    emit(c.out.empty() ? c.csv : c.out, [&](std::ostream& os) {
        os << "param,value,eq,es_paper,es_little,energy_saving";
        if (c.simulate) os << ",eq_sim,eq_sim_half_width,es_sim,es_sim_half_width,dormant_sim";
        os << ",failure\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::string failure = rows[i].failure;
            for (auto& ch : failure) {
                if (ch == '"') ch = '\'';
            }
            os << c.param << ',' << csv_number(c.values[i]) << ',' << rows[i].cells << ','
               << (failure.empty() ? "" : '"' + failure + '"') << '\n';
            if (code == 0) code = rows[i].code;
        }
    });
    return code;
}

int run_optimal_m(const RunConfig& c) {
    if (!(c.bound > 0.0)) throw tl::Error(tl::Errc::invalid_config, "optimal-m needs a positive --bound");
    const auto search = tl::metrics::optimal_threshold(c.params, c.bound, c.criterion, c.m_max, c.solver_options());
    tl::io::Json j;
    j["params"] = tl::io::to_json(c.params);
    j["bound"] = c.bound;
    j["criterion"] = c.criterion == tl::metrics::Criterion::eq ? "eq" : "es";
    j["m_max"] = c.m_max;
    j["result"] = tl::io::to_json(search);
    emit_json(c.out, j);
    return 0;
}

struct Subcommand {
    CLI::App* app = nullptr;
    std::string config_path;
    bool simulate = false;
    std::map<std::string, std::string> values;
    std::function<int(const RunConfig&)> run;
};

std::string dashed(std::string key) {
    for (auto& ch : key) {
        if (ch == '_') ch = '-';
    }
    return key;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"threshold_lab: power-of-d dispatch with sleeping servers (mean field, fixed point, simulation)"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::function<int(const RunConfig&)>>> commands{
        {"solve", run_solve},     {"ode", run_ode},     {"simulate", run_simulate},
        {"compare", run_compare}, {"sweep", run_sweep}, {"optimal-m", run_optimal_m}};
    const std::map<std::string, std::string> help{
        {"solve", "fixed point and performance measures as JSON"},
        {"ode", "mean-field trajectory from the empty system as CSV"},
        {"simulate", "discrete-event simulation as JSON (per-batch CSV with --csv)"},
        {"compare", "fixed point against simulation at several N as CSV"},
        {"sweep", "grid of solves (and simulations with --simulate) as CSV"},
        {"optimal-m", "largest threshold meeting a bound on E(Q) or E(S) as JSON"}};

    std::vector<Subcommand> subs(commands.size());
    for (std::size_t i = 0; i < commands.size(); ++i) {
        auto& s = subs[i];
        s.run = commands[i].second;
        s.app = app.add_subcommand(commands[i].first, help.at(commands[i].first));
        s.app->add_option("--config", s.config_path, "flat key = value file; flags override it");
        for (const auto& key : tl::config::known_keys()) {
            if (key == "simulate") {
                s.app->add_flag("--simulate", s.simulate, "also simulate every sweep point");
                continue;
            }
            std::string names = "--" + dashed(key);
            if (dashed(key) != key) names += ",--" + key;
            s.app->add_option(names, s.values[key]);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    for (auto& s : subs) {
        if (!s.app->parsed()) continue;
        try {
            RunConfig config;
            if (!s.config_path.empty()) tl::config::apply_file(config, s.config_path);
            for (const auto& key : tl::config::known_keys()) {
                if (key == "simulate") {
                    if (s.simulate) config.simulate = true;
                    continue;
                }
                if (s.app->count("--" + dashed(key)) > 0) tl::config::apply(config, key, s.values[key]);
            }
            tl::config::validate(config);
            return s.run(config);
        } catch (const tl::Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return tl::config::exit_code(e.code());
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 3;
        }
    }
    return 2;
}
