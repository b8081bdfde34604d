#pragma once

#include <cmath>

namespace qhlab {

// exp(-1/x) for x > 0, 0 otherwise.  Building block for all smooth cutoffs.
inline double smooth_ramp(double x) {
    return x > 0.0 ? std::exp(-1.0 / x) : 0.0;
}

// Smooth transition: 0 for x <= 0, 1 for x >= 1, strictly increasing between.
inline double smooth_step(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double a = smooth_ramp(x);
    const double b = smooth_ramp(1.0 - x);
    return a / (a + b);
}

// Mollified step chi: chi(l) = 1 for l in [0,1], 0 for l >= 2, chi' <= 0.
inline double mollified_step(double lambda) {
    if (lambda <= 1.0) return 1.0;
    if (lambda >= 2.0) return 0.0;
    return 1.0 - smooth_step(lambda - 1.0);
}

// One-variable Gaussian-windowed bump factor centered at c with support
// half-width r: equals 1 at the center, vanishes identically for |u-c| >= r.
inline double bump_factor(double u, double c, double r) {
    const double s = (u - c) / r;
    if (std::fabs(s) >= 1.0) return 0.0;
    return std::exp(-2.0 * s * s) * mollified_step(2.0 * std::fabs(s));
}

} // namespace qhlab
