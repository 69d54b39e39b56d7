#pragma once

#include <string>

#include "json.hpp"

#include "threshold_lab/fixedpoint.hpp"
#include "threshold_lab/metrics.hpp"
#include "threshold_lab/oracle.hpp"
#include "threshold_lab/simulator.hpp"

namespace threshold_lab::io {

using Json = nlohmann::ordered_json;

/// %.17g, with "nan"/"inf" spelled out. Used for every CSV number.
std::string csv_number(double x);

Json to_json(const ModelParams& params);
Json to_json(const Estimate& estimate);
/// Fields lambda, mu, d, m, delta2, xi, delta, residual_max, flux_deviation_max.
Json to_json(const fixedpoint::StationaryDistribution& dist);
Json to_json(const metrics::PerformanceReport& report);
Json to_json(const sim::SimConfig& config);
Json to_json(const sim::SimReport& report);
Json to_json(const metrics::ThresholdSearch& search);
Json to_json(const oracle::CtmcSolution& solution, bool full_vector = false);

}  // namespace threshold_lab::io
