#include "threshold_lab/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>

namespace threshold_lab {

double student_t_quantile(double p, int dof) {
    boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(dist, p);
}

double Estimate::sigma(double confidence) const {
    if (samples < 2) return 0.0;
    return half_width / student_t_quantile(0.5 + 0.5 * confidence, samples - 1);
}

Estimate mean_ci(std::span<const double> samples, double confidence) {
    double sum = 0.0;
    int n = 0;
    for (double x : samples) {
        if (!std::isfinite(x)) continue;
        sum += x;
        ++n;
    }
    Estimate e;
    e.samples = n;
    if (n == 0) {
        e.mean = std::nan("");
        return e;
    }
    e.mean = sum / n;
    if (n < 2) return e;
    double ss = 0.0;
    for (double x : samples) {
        if (std::isfinite(x)) ss += (x - e.mean) * (x - e.mean);
    }
    const double sd = std::sqrt(ss / (n - 1));
    e.half_width = student_t_quantile(0.5 + 0.5 * confidence, n - 1) * sd / std::sqrt(static_cast<double>(n));
    return e;
}

}  // namespace threshold_lab
