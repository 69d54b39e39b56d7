#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "threshold_lab/dynamics.hpp"
#include "threshold_lab/model.hpp"
#include "threshold_lab/rng.hpp"
#include "threshold_lab/stats.hpp"

namespace threshold_lab::sim {

struct SimConfig {
    int n_servers = 100;
    std::uint64_t seed = 1;
    std::optional<double> t_warmup;   ///< default: 10 / (mu - lambda)
    std::optional<double> t_measure;  ///< default: 10^6 expected arrivals
    int n_batches = 20;
    int n_replications = 1;
    std::optional<int> queue_cap;
    Sampling sampling = Sampling::without_replacement;
    TieBreak tie_break = TieBreak::uniform;
};

double default_warmup(const ModelParams& params);
double default_measure(const ModelParams& params, int n_servers);

/// Throws invalid_config for n_servers < 1, n_batches < 2, t_measure <= 0 and so on.
void validate(const SimConfig& config);

struct BatchRow {
    int batch_index = 0;
    double eq = 0.0;  ///< time-average tasks per server
    double es = 0.0;  ///< mean sojourn of departures in the batch (NaN when none)
    double v0 = 0.0;  ///< time-average dormant fraction
};

struct SimReport {
    ModelParams params;
    SimConfig config;  ///< with warm-up and measurement length resolved
    std::vector<double> u_hat;  ///< u_hat[k-1] estimates u_k
    std::vector<double> v_hat;  ///< v_hat[j] estimates v_j, j < M
    std::vector<double> u_half_width;
    std::vector<double> v_half_width;
    Estimate eq_mean;
    Estimate es_mean;
    Estimate dormant_fraction;
    long long tasks_completed = 0;
    long long arrivals = 0;
    int replications = 1;
    bool unstable = false;
    std::vector<BatchRow> batches;

    FractionState state() const;
};

/// d distinct indices (or d independent draws with replacement) from [0, n_servers).
/// Throws d_exceeds_n when sampling without replacement and d > n_servers.
void sample_servers(Philox4x32& rng, int n_servers, int d, Sampling sampling, std::vector<int>& out);

/// One replication with the random stream (config.seed, replication_index).
SimReport run_replication(const ModelParams& params, const SimConfig& config, int replication_index = 0);

/// config.n_replications independent replications, pooled. Runs replications in
/// parallel (THRESHOLD_LAB_THREADS); the result does not depend on scheduling.
SimReport run_ensemble(const ModelParams& params, const SimConfig& config);

/// Columns batch_index,eq,es,v0.
void write_batches_csv(std::ostream& os, const SimReport& report);

}  // namespace threshold_lab::sim
