#pragma once

#include <string>
#include <utility>
#include <vector>

#include "threshold_lab/fixedpoint.hpp"
#include "threshold_lab/model.hpp"
#include "threshold_lab/simulator.hpp"

namespace threshold_lab::metrics {

inline constexpr const char* kVerbatimFlag = "paper-formula-verbatim";

struct QueueLengths {
    double eq_w = 0.0;
    double eq_d = 0.0;
    double eq = 0.0;
};

struct SojournPaper {
    double es_w = 0.0;
    double es_v = 0.0;
    double es = 0.0;
    std::vector<std::string> flags;
};

struct PerformanceReport {
    ModelParams params;
    double eq_w = 0.0;
    double eq_d = 0.0;
    double eq = 0.0;
    double es_w = 0.0;
    double es_v = 0.0;
    double es_paper = 0.0;
    double es_little = 0.0;
    double energy_saving = 0.0;
    std::vector<std::string> flags;
};

/// eq_w = sum_k delta_k, eq_d = sum_{k=1}^{M-1} xi_k.
QueueLengths queue_lengths(const fixedpoint::StationaryDistribution& dist);

/// The printed working, dormant and overall sojourn formulas, evaluated term by term
/// as written (including their unusual k*mu factors). Flagged kVerbatimFlag.
SojournPaper sojourn_paper(const fixedpoint::StationaryDistribution& dist);

/// E(Q) / lambda.
double sojourn_little(const fixedpoint::StationaryDistribution& dist);

/// Stationary dormant fraction xi_0.
double energy_saving(const fixedpoint::StationaryDistribution& dist);

PerformanceReport performance(const fixedpoint::StationaryDistribution& dist);

/// Same fields from a simulation: eq, eq_w, eq_d and energy saving from the
/// time averages, es_paper left NaN, es_little = eq / lambda.
PerformanceReport performance(const sim::SimReport& report);

enum class Criterion { eq, es };

struct ThresholdSearch {
    int m_star = 0;
    bool linear_fallback = false;
    std::vector<std::pair<int, double>> evaluated;  ///< (M, criterion value), ascending M
};

/// Largest M in [2, m_max] with criterion(M) <= bound, where criterion is E(Q) or the
/// Little's-law sojourn from the fixed point. Binary search assumes the criterion grows
/// with M; when the endpoint values contradict that, every M is scanned instead.
/// Throws bound_infeasible when criterion(2) > bound.
ThresholdSearch optimal_threshold(const ModelParams& params, double bound, Criterion criterion, int m_max,
                                  const fixedpoint::SolverOptions& options = {});

}  // namespace threshold_lab::metrics
