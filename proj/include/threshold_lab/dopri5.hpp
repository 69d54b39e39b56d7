#pragma once

// Dormand-Prince 5(4) embedded pair with a PI step-size controller.
//
// The error test is error-per-unit-step: a step of size h is accepted when the
// max-norm of the embedded error estimate is at most tol * h. The propagated
// solution is the 5th-order one (local extrapolation), FSAL is used.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace threshold_lab {

struct Dopri5Stats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evals = 0;
};

template <class Rhs>
class Dopri5 {
public:
    Dopri5(Rhs rhs, std::size_t dim, double tol, double h_max = 1e9)
        : rhs_(std::move(rhs)), tol_(tol), h_max_(h_max) {
        resize(dim);
    }

    void resize(std::size_t dim) {
        for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &y5_}) v->assign(dim, 0.0);
        fsal_valid_ = false;
    }

    /// Forget the cached first stage, e.g. after the caller modified y in place.
    void invalidate() { fsal_valid_ = false; }

    double step_size() const { return h_; }
    const Dopri5Stats& stats() const { return stats_; }

    /// Attempts one step from (t, y), never past t_stop. On acceptance y and t are
    /// advanced and true is returned; on rejection only the step size shrinks.
    bool try_step(double& t, std::span<double> y, double t_stop) {
        const std::size_t n = y.size();
        if (!fsal_valid_) {
            rhs_(t, std::span<const double>(y), std::span<double>(k1_));
            ++stats_.rhs_evals;
            fsal_valid_ = true;
            if (h_ <= 0.0) h_ = initial_step(t, y);
        }
        double h = std::min({h_, h_max_, t_stop - t});
        const bool clipped = h < h_;

        auto stage = [&](std::span<const double> coeffs_k, std::vector<double>& out, double c) {
            // coeffs_k: a_i1..a_ij for the already computed stages
            const std::vector<double>* ks[] = {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_};
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < coeffs_k.size(); ++j) acc += coeffs_k[j] * (*ks[j])[i];
                tmp_[i] = y[i] + h * acc;
            }
            rhs_(t + c * h, std::span<const double>(tmp_), std::span<double>(out));
            ++stats_.rhs_evals;
        };

        static constexpr double a2[] = {1.0 / 5.0};
        static constexpr double a3[] = {3.0 / 40.0, 9.0 / 40.0};
        static constexpr double a4[] = {44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0};
        static constexpr double a5[] = {19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0,
                                        -212.0 / 729.0};
        static constexpr double a6[] = {9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                        49.0 / 176.0, -5103.0 / 18656.0};
        static constexpr double b[] = {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
                                       -2187.0 / 6784.0, 11.0 / 84.0};
        static constexpr double e[] = {71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                       -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0};

        stage(a2, k2_, 1.0 / 5.0);
        stage(a3, k3_, 3.0 / 10.0);
        stage(a4, k4_, 4.0 / 5.0);
        stage(a5, k5_, 8.0 / 9.0);
        stage(a6, k6_, 1.0);
        stage(b, k7_, 1.0);  // y5 evaluated at t + h; b serves as the 7th-stage row
        for (std::size_t i = 0; i < n; ++i) y5_[i] = tmp_[i];

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = h * (e[0] * k1_[i] + e[2] * k3_[i] + e[3] * k4_[i] + e[4] * k5_[i] +
                                   e[5] * k6_[i] + e[6] * k7_[i]);
            err = std::max(err, std::abs(ei));
        }
        // Scaled error: <= 1 means accept.
        const double scaled = err / (tol_ * h);

        if (!std::isfinite(scaled)) {
            h_ = 0.25 * h;
            ++stats_.rejected;
            return false;
        }

        constexpr double safety = 0.9;
        constexpr double alpha = 0.7 / 4.0;
        constexpr double beta = 0.4 / 4.0;
        if (scaled <= 1.0) {
            double factor = 5.0;
            if (scaled > 0.0) {
                factor = safety * std::pow(scaled, -alpha) * std::pow(std::max(err_prev_, 1e-4), beta);
                factor = std::clamp(factor, 0.2, 5.0);
            }
            if (rejected_last_) factor = std::min(factor, 1.0);
            for (std::size_t i = 0; i < n; ++i) y[i] = y5_[i];
            std::swap(k1_, k7_);
            t += h;
            if (!clipped) h_ = std::min(h * factor, h_max_);
            err_prev_ = scaled;
            rejected_last_ = false;
            ++stats_.accepted;
            return true;
        }
        const double factor = std::max(0.2, safety * std::pow(scaled, -1.0 / 5.0));
        h_ = h * factor;
        rejected_last_ = true;
        ++stats_.rejected;
        return false;
    }

private:
    double initial_step(double t, std::span<const double> y) {
        double ynorm = 0.0;
        double fnorm = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            ynorm = std::max(ynorm, std::abs(y[i]));
            fnorm = std::max(fnorm, std::abs(k1_[i]));
        }
        (void)t;
        if (fnorm < 1e-12) return 1e-2;
        return std::clamp(0.01 * std::max(ynorm, 1e-2) / fnorm, 1e-6, 1e-1);
    }

    Rhs rhs_;
    double tol_;
    double h_max_;
    double h_ = 0.0;
    double err_prev_ = 1e-4;
    bool rejected_last_ = false;
    bool fsal_valid_ = false;
    Dopri5Stats stats_;
    std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, y5_;
};

}  // namespace threshold_lab
