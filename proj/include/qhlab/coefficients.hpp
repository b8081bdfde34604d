#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qhlab/errors.hpp"

namespace qhlab {

// d^k/du^k exp(-(u/w)^2) via physicists' Hermite polynomials, k <= 3.
inline double gaussian_deriv(double u, double w, int k) {
    const double v = u / w;
    const double g = std::exp(-v * v);
    double hk;
    switch (k) {
        case 0: hk = 1.0; break;
        case 1: hk = 2.0 * v; break;
        case 2: hk = 4.0 * v * v - 2.0; break;
        case 3: hk = (8.0 * v * v - 12.0) * v; break;
        default: throw std::invalid_argument("gaussian_deriv: order > 3");
    }
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    return sign * hk * g / std::pow(w, k);
}

// d^k/dx^k (1+x^2)^(g/2), k <= 3 (one spatial dimension).
inline double japanese_bracket_pow_deriv(double x, double g, int k) {
    const double q = 1.0 + x * x;
    const double p = g / 2.0;
    switch (k) {
        case 0: return std::pow(q, p);
        case 1: return g * x * std::pow(q, p - 1.0);
        case 2:
            return g * std::pow(q, p - 2.0) * (q + (g - 2.0) * x * x);
        case 3:
            return g * x * std::pow(q, p - 3.0) *
                   ((3.0 * g - 6.0) * q + (g - 2.0) * (g - 4.0) * x * x);
        default: throw std::invalid_argument("bracket_pow_deriv: order > 3");
    }
}

// The perturbed metric a_ij(t,x) and potential V(t,x) with analytically
// coded partial derivatives to total order 3.  Immutable after
// construction; shareable across workers.
//
// Registry forms:
//   identity                       a = delta, V = 0
//   bump-metric(A, c, w)           a = delta * (1 + A exp(-t^2 - |x-c|^2/w^2))
//   sublinear-potential(c, gamma)  V = c <x>^gamma, gamma in (0,1)
//   composite                      bump metric + sublinear potential
class CoefficientField {
public:
    int dimension = 1;
    double decay_exponent = 0.5;  // reported epsilon
    std::string tag;

    bool has_bump = false;
    double bump_amplitude = 0.0;
    std::vector<double> bump_center;  // size = dimension
    double bump_width = 1.0;

    bool has_potential = false;
    double pot_coeff = 0.0;
    double pot_exponent = 0.5;

    // partial_t^kt partial_x^alpha a_ij(t, x).  alpha.size() == dimension.
    double metric_deriv(int i, int j, int kt, const std::vector<int>& alpha,
                        double t, const std::vector<double>& x) const {
        int total_alpha = 0;
        for (int a : alpha) total_alpha += a;
        const bool order0 = (kt == 0 && total_alpha == 0);
        double val = (order0 && i == j) ? 1.0 : 0.0;
        if (has_bump && i == j) {
            double g = gaussian_deriv(t, 1.0, kt);
            for (int k = 0; k < dimension; ++k)
                g *= gaussian_deriv(x[k] - bump_center[k], bump_width,
                                    alpha[k]);
            val += bump_amplitude * g;
        }
        return val;
    }

    double potential_deriv(int kt, const std::vector<int>& alpha, double t,
                           const std::vector<double>& x) const {
        (void)t;
        if (!has_potential) return 0.0;
        if (kt > 0) return 0.0;  // bundled potential is time-independent
        if (dimension == 1)
            return pot_coeff *
                   japanese_bracket_pow_deriv(x[0], pot_exponent, alpha[0]);
        // d >= 2: value and gradient only (enough for the classical flows).
        int total = 0;
        for (int a : alpha) total += a;
        double r2 = 0.0;
        for (double xi : x) r2 += xi * xi;
        const double q = 1.0 + r2;
        if (total == 0) return pot_coeff * std::pow(q, pot_exponent / 2.0);
        if (total == 1) {
            int k = 0;
            while (alpha[k] == 0) ++k;
            return pot_coeff * pot_exponent * x[k] *
                   std::pow(q, pot_exponent / 2.0 - 1.0);
        }
        throw std::invalid_argument(
            "potential_deriv: order > 1 not coded for d >= 2");
    }

    int coded_order() const {
        return (has_potential && dimension > 1) ? 1 : 3;
    }

    // --- scalar fast paths for d = 1 flows -------------------------------
    double a1(double t, double x) const {
        double v = 1.0;
        if (has_bump) {
            const double u = (x - bump_center[0]) / bump_width;
            v += bump_amplitude * std::exp(-t * t - u * u);
        }
        return v;
    }
    double a1_dx(double t, double x) const {
        if (!has_bump) return 0.0;
        const double u = (x - bump_center[0]) / bump_width;
        return bump_amplitude * std::exp(-t * t - u * u) *
               (-2.0 * u / bump_width);
    }
    double a1_dt(double t, double x) const {
        if (!has_bump) return 0.0;
        const double u = (x - bump_center[0]) / bump_width;
        return bump_amplitude * std::exp(-t * t - u * u) * (-2.0 * t);
    }
    double v1(double t, double x) const {
        std::vector<double> xv{x};
        std::vector<int> al{0};
        return potential_deriv(0, al, t, xv);
    }
    double v1_dx(double t, double x) const {
        if (!has_potential) return 0.0;
        return pot_coeff * japanese_bracket_pow_deriv(x, pot_exponent, 1);
    }
    double v1_dt(double, double) const { return 0.0; }
};

struct FieldSpec {
    std::string tag = "identity";
    int dimension = 1;
    double amplitude = 0.1;
    std::vector<double> center = {0.0};
    double width = 1.0;
    double coeff = 1.0;
    double exponent = 0.5;
};

inline CoefficientField build_field(const FieldSpec& spec) {
    CoefficientField f;
    f.dimension = spec.dimension;
    f.tag = spec.tag;
    if (spec.dimension < 1) throw schema_error("field dimension must be >= 1");
    auto center = spec.center;
    center.resize(static_cast<std::size_t>(spec.dimension), 0.0);

    const bool want_bump =
        (spec.tag == "bump-metric" || spec.tag == "composite");
    const bool want_pot =
        (spec.tag == "sublinear-potential" || spec.tag == "composite");
    if (!want_bump && !want_pot && spec.tag != "identity")
        throw schema_error("unknown field tag: " + spec.tag);

    if (want_bump) {
        if (std::fabs(spec.amplitude) >= 1.0)
            throw schema_error(
                "bump amplitude must satisfy |A| < 1 for positive "
                "definiteness");
        if (spec.width <= 0.0) throw schema_error("bump width must be > 0");
        f.has_bump = true;
        f.bump_amplitude = spec.amplitude;
        f.bump_center = center;
        f.bump_width = spec.width;
    } else {
        f.bump_center = center;
    }
    if (want_pot) {
        if (!(spec.exponent > 0.0 && spec.exponent < 1.0))
            throw schema_error("sublinear exponent must lie in (0,1)");
        f.has_potential = true;
        f.pot_coeff = spec.coeff;
        f.pot_exponent = spec.exponent;
    }
    return f;
}

struct ValidationRecord {
    bool is_metric;            // else potential
    int kt;                    // time-derivative order
    std::vector<int> alpha;    // spatial multi-index
    double constant;           // fitted sup of |deriv| * <x>^weight
};

struct ValidationReport {
    std::vector<ValidationRecord> records;
    bool pass = false;
    double ceiling = 0.0;
    double t_min = 0, t_max = 0, x_min = 0, x_max = 0;
    int samples_per_axis = 0;
};

// Fit the short-range constants sup |d^a (a - delta)| <x>^{1+|a'|+eps} and
// sup |d^a V| <x>^{-1+|a'|+eps} over a sample box (d = 1).
inline ValidationReport validate_assumption(const CoefficientField& field,
                                            double t_min, double t_max,
                                            double x_min, double x_max,
                                            int max_order,
                                            int samples_per_axis = 201,
                                            double ceiling = 10.0) {
    if (field.dimension != 1)
        throw std::invalid_argument("validate_assumption: d = 1 only");
    if (max_order > field.coded_order())
        throw std::invalid_argument(
            "validate_assumption: max_order exceeds coded derivatives");
    ValidationReport rep;
    rep.ceiling = ceiling;
    rep.t_min = t_min;
    rep.t_max = t_max;
    rep.x_min = x_min;
    rep.x_max = x_max;
    rep.samples_per_axis = samples_per_axis;

    const double eps = field.decay_exponent;
    const int n = samples_per_axis;
    std::vector<double> xv(1), delta_alpha;
    std::vector<int> al(1);
    rep.pass = true;
    for (int metric = 1; metric >= 0; --metric) {
        for (int kt = 0; kt <= max_order; ++kt) {
            for (int ax = 0; ax + kt <= max_order; ++ax) {
                al[0] = ax;
                double c = 0.0;
                for (int it = 0; it < n; ++it) {
                    const double t =
                        t_min + (t_max - t_min) * it / double(n - 1);
                    for (int ix = 0; ix < n; ++ix) {
                        const double x =
                            x_min + (x_max - x_min) * ix / double(n - 1);
                        xv[0] = x;
                        const double jb = std::sqrt(1.0 + x * x);
                        double v, w;
                        if (metric) {
                            v = field.metric_deriv(0, 0, kt, al, t, xv) -
                                ((kt == 0 && ax == 0) ? 1.0 : 0.0);
                            w = std::pow(jb, 1.0 + ax + eps);
                        } else {
                            v = field.potential_deriv(kt, al, t, xv);
                            w = std::pow(jb, -1.0 + ax + eps);
                        }
                        c = std::max(c, std::fabs(v) * w);
                    }
                }
                rep.records.push_back(
                    {metric == 1, kt, al, c});
                if (!(std::isfinite(c) && c <= ceiling)) rep.pass = false;
            }
        }
    }
    return rep;
}

} // namespace qhlab
