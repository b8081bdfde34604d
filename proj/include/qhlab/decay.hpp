#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhlab/errors.hpp"

namespace qhlab {

enum class DecayVerdict { rapid_decay, finite_order, non_decaying };

inline std::string to_string(DecayVerdict v) {
    switch (v) {
        case DecayVerdict::rapid_decay: return "rapid-decay";
        case DecayVerdict::finite_order: return "finite-order";
        default: return "non-decaying";
    }
}

// Computational surrogate for "= O(h^inf)": fitted log-log slope of the
// norms against h over a dyadic sequence.
struct DecayReport {
    std::vector<double> h_values;
    std::vector<double> norms;
    double slope = 0.0;
    double intercept = 0.0;  // log2 norm at log2 h = 0
    DecayVerdict verdict = DecayVerdict::non_decaying;
    double threshold = 4.0;
    std::size_t n_used = 0;  // pairs surviving the machine-floor clamp

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["h_values"] = h_values;
        j["norms"] = norms;
        j["slope"] = slope;
        j["intercept"] = intercept;
        j["verdict"] = to_string(verdict);
        j["threshold"] = threshold;
        return j;
    }

    void write_csv(std::ostream& os) const {
        os << "h,norm\n";
        char buf[80];
        for (std::size_t i = 0; i < h_values.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", h_values[i],
                          norms[i]);
            os << buf;
        }
    }
};

// Least-squares fit of log2 norm = intercept + slope * log2 h; norms at or
// below the machine floor are excluded from the fit.
inline DecayReport decay_order(const std::vector<double>& h_values,
                               const std::vector<double>& norms,
                               double threshold = 4.0) {
    if (h_values.size() != norms.size())
        throw schema_error("decay_order: h/norm length mismatch");
    if (h_values.size() < 6)
        throw schema_error("decay_order: need >= 6 dyadic h values");
    double nmax = 0.0;
    for (std::size_t i = 0; i < h_values.size(); ++i) {
        if (!(h_values[i] > 0.0) ||
            (i + 1 < h_values.size() && h_values[i + 1] >= h_values[i]))
            throw schema_error("decay_order: h must be positive, strictly decreasing");
        if (norms[i] < 0.0) throw schema_error("decay_order: negative norm");
        nmax = std::max(nmax, norms[i]);
    }
    const double floor = std::max(1e-15, 1e-13 * nmax);

    DecayReport rep;
    rep.h_values = h_values;
    rep.norms = norms;
    rep.threshold = threshold;

    double sx = 0, sxx = 0, sy = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < h_values.size(); ++i) {
        if (norms[i] <= floor) continue;
        const double X = std::log2(h_values[i]);
        const double Y = std::log2(norms[i]);
        sx += X;
        sxx += X * X;
        sy += Y;
        sxy += X * Y;
        ++n;
    }
    if (n < 4)
        throw numerical_error(
            "decay_order: fewer than 4 usable pairs above the machine floor "
            "(norms effectively zero: treat as rapid decay)");
    const double dn = static_cast<double>(n);
    const double den = dn * sxx - sx * sx;
    rep.slope = (dn * sxy - sx * sy) / den;
    rep.intercept = (sxx * sy - sx * sxy) / den;
    rep.n_used = n;
    if (rep.slope >= threshold)
        rep.verdict = DecayVerdict::rapid_decay;
    else if (rep.slope >= 0.25)
        rep.verdict = DecayVerdict::finite_order;
    else
        rep.verdict = DecayVerdict::non_decaying;
    return rep;
}

} // namespace qhlab
