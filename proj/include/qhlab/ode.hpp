#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "qhlab/errors.hpp"

namespace qhlab {

using StateVec = std::vector<double>;

struct OdeOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double initial_step = 0.0;   // 0 -> heuristic
    double min_step = 0.0;       // 0 -> 1e4 * DBL_EPSILON * |span|
    std::size_t max_steps = 50'000'000;
};

struct OdeSample {
    double t;
    StateVec state;
    double step;  // accepted step that produced this sample
};

struct OdeResult {
    StateVec state;                   // state at t_end
    std::vector<OdeSample> samples;   // filled only when recording
    std::size_t n_accepted = 0;
    std::size_t n_rejected = 0;
};

// Adaptive Dormand-Prince 5(4) integrator.  rhs(t, y, dydt) fills dydt.
// Throws numerical_error on step-size underflow, reporting the last
// reached time in the message.
inline OdeResult integrate_ode(
    const std::function<void(double, const StateVec&, StateVec&)>& rhs,
    StateVec y, double t0, double t1, const OdeOptions& opt = {},
    bool record = false) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                            c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113,
                            b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                            e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    const std::size_t n = y.size();
    const double dir = (t1 >= t0) ? 1.0 : -1.0;
    const double span = std::fabs(t1 - t0);
    OdeResult res;
    if (span == 0.0) {
        res.state = std::move(y);
        if (record) res.samples.push_back({t0, res.state, 0.0});
        return res;
    }

    StateVec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y5(n);
    double t = t0;
    double hstep = opt.initial_step > 0 ? opt.initial_step : span / 100.0;
    const double hmin =
        opt.min_step > 0 ? opt.min_step : 1e4 * 2.22e-16 * span;

    rhs(t, y, k1);
    if (record) res.samples.push_back({t, y, 0.0});

    for (std::size_t step = 0; step < opt.max_steps; ++step) {
        if (std::fabs(t - t1) <= 0.0 ||
            dir * (t1 - t) <= 0.0) {
            res.state = std::move(y);
            return res;
        }
        const bool capped = hstep > std::fabs(t1 - t);
        const double h_use = capped ? std::fabs(t1 - t) : hstep;
        const double h = dir * h_use;

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        rhs(t + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] +
                                  a54 * k4[i]);
        rhs(t + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                  a64 * k4[i] + a65 * k5[i]);
        rhs(t + h, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] +
                                b5 * k5[i] + b6 * k6[i]);
        rhs(t + h, y5, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                   e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc =
                opt.abs_tol +
                opt.rel_tol * std::max(std::fabs(y[i]), std::fabs(y5[i]));
            const double r = ei / sc;
            err += r * r;
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (err <= 1.0) {
            t += h;
            y.swap(y5);
            k1.swap(k7);  // FSAL
            ++res.n_accepted;
            if (record) res.samples.push_back({t, y, h});
        } else {
            ++res.n_rejected;
        }

        double fac = 0.9 * std::pow(err > 1e-300 ? err : 1e-300, -0.2);
        fac = std::min(5.0, std::max(0.2, fac));
        if (capped && err <= 1.0) {
            // final-interval sliver: don't let it shrink the controller
            hstep = std::max(hstep, h_use * fac);
        } else {
            hstep = h_use * fac;
        }
        if (hstep < hmin && err > 1.0)
            throw numerical_error(
                "ode step underflow at t=" + std::to_string(t));
    }
    throw numerical_error("ode max step count exceeded at t=" +
                          std::to_string(t));
}

} // namespace qhlab
