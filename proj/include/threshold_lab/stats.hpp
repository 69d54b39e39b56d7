#pragma once

#include <span>

namespace threshold_lab {

/// A point estimate with a symmetric confidence half-width.
struct Estimate {
    double mean = 0.0;
    double half_width = 0.0;
    int samples = 0;

    /// Standard error implied by the half-width at the given confidence.
    double sigma(double confidence = 0.95) const;
};

/// Two-sided Student-t quantile, e.g. student_t_quantile(0.975, 19).
double student_t_quantile(double p, int dof);

/// Mean and t-based confidence half-width of approximately independent samples
/// (batch means or replication means). Non-finite entries are skipped; fewer than
/// two usable samples give a zero half-width.
Estimate mean_ci(std::span<const double> samples, double confidence = 0.95);

}  // namespace threshold_lab
