#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhlab/classical.hpp"
#include "qhlab/coefficients.hpp"
#include "qhlab/decay.hpp"
#include "qhlab/errors.hpp"
#include "qhlab/grid.hpp"
#include "qhlab/symbols.hpp"
#include "qhlab/weyl.hpp"

namespace qhlab {

// default h sweep: geometric from 2^-2 to 2^-4.5, ratio 2^-1/2
inline std::vector<double> default_h_sequence() {
    std::vector<double> h;
    for (int k = 4; k <= 9; ++k) h.push_back(std::pow(2.0, -0.5 * k));
    return h;
}

// Wave-front query: spatial-homogeneous target (y, eta) for initial data,
// or spacetime quasi-homogeneous target (s, y, sigma, eta) for solutions.
struct WFQuery {
    bool spacetime = false;
    double s = 0.0;
    double y = 0.0;
    double sigma = 0.0;
    bool sigma_set = false;  // defaults to the characteristic value
    double eta = 1.0;
    double radius = 0.5;
    std::vector<double> h_seq = default_h_sequence();
    double threshold = 4.0;
    double theta = 2.0;

    void validate() const {
        if (eta == 0.0 && (!spacetime || y == 0.0))
            throw schema_error("WFQuery: (y, eta) must be nonzero");
        if (spacetime && eta == 0.0)
            throw schema_error("WFQuery: spacetime query needs eta != 0");
        if (!(radius > 0.0)) throw schema_error("WFQuery: radius must be > 0");
        if (h_seq.size() < 6)
            throw schema_error("WFQuery: need >= 6 h values");
    }

    // characteristic value -1/2 a(s,y) eta^2 (identity metric if no field)
    double effective_sigma(const CoefficientField* field) const {
        if (sigma_set) return sigma;
        const double a =
            field != nullptr ? field->a1(s, y) : 1.0;
        return -0.5 * a * eta * eta;
    }
};

// Homogeneous wave front test on initial data: norms of
// a^W(hx, hp) phi over the h sweep, a = bump at (y, eta).
inline DecayReport test_hwf(const GridField1D& phi, const WFQuery& q,
                            std::vector<std::string>* warnings = nullptr) {
    q.validate();
    std::vector<double> norms;
    for (double h : q.h_seq) {
        PhaseSymbol a = symbol_bump2(q.y, q.eta, q.radius, q.radius);
        GridField1D v =
            weyl_apply(a, WeylMode::spatial_hx_hp, phi, h, warnings);
        norms.push_back(v.norm());
    }
    return decay_order(q.h_seq, norms, q.threshold);
}

enum class QhwfMode { full, reduced };

// Quasi-homogeneous wave front test on a spacetime field.
//  full:    norms of a^W(t, x, h^theta p_t, h p_x) u,
//           a = bump at (s, y, sigma, eta)
//  reduced: norms of a^W(t, x, h p_x) u with a = chi(t - s) b(x, xi),
//           b = bump at (y, eta)  (free fields, theta = 2 equivalent)
inline DecayReport test_qhwf(const SpacetimeField& u, const WFQuery& q,
                             QhwfMode mode = QhwfMode::full,
                             const CoefficientField* field = nullptr,
                             std::vector<std::string>* warnings = nullptr) {
    q.validate();
    if (!q.spacetime)
        throw schema_error("test_qhwf: query must be spacetime");
    const double sigma = q.effective_sigma(field);
    std::vector<double> norms;
    for (double h : q.h_seq) {
        if (mode == QhwfMode::full) {
            PhaseSymbol a =
                symbol_spacetime_bump(q.s, q.radius, q.y, q.radius, sigma,
                                      q.radius, q.eta, q.radius);
            SpacetimeField v = weyl_apply(a, WeylMode::spacetime_full, u, h,
                                          q.theta, warnings);
            norms.push_back(v.norm());
        } else {
            PhaseSymbol b = symbol_bump2(q.y, q.eta, q.radius, q.radius);
            PhaseSymbol a = symbol_time_window(q.s, q.radius, b);
            SpacetimeField v = weyl_apply(a, WeylMode::spacetime_t_x, u, h,
                                          2.0, warnings);
            norms.push_back(v.norm());
        }
    }
    return decay_order(q.h_seq, norms, q.threshold);
}

enum class PredictMode { perturbed_to_free, free_to_initial, corollary };

struct PredictedQuery {
    WFQuery query;
    bool singular = true;     // predicted status at the target
    std::string provenance;   // which statement and which classical data
};

// Maps a source point through the classical correspondence.
//  perturbed_to_free: (s,y,eta) with  sign(s) s < 0 -> free-side query
//      (s, x_pm, -xi_pm^2/2, xi_pm) from scattering data
//  free_to_initial (d=1): (s,y,eta) -> homogeneous query (-s eta, eta)
//  corollary (d=1): (s,y,eta), observation time r -> homogeneous query
//      ((r-s) xi_pm, xi_pm) against the solution at time r
inline PredictedQuery predict_point(const CoefficientField& field,
                                    double s, double y, double eta,
                                    PredictMode mode, double r_obs = 0.0,
                                    double scatter_tol = 1e-10) {
    PredictedQuery out;
    if (mode == PredictMode::free_to_initial) {
        out.query.spacetime = false;
        out.query.y = -s * eta;
        out.query.eta = eta;
        out.provenance = "free-solution dichotomy: (-s eta, eta) in HWF(phi)";
        return out;
    }
    if (s == 0.0)
        throw schema_error("predict_point: need s != 0 (sign constraint)");
    const int direction = s < 0.0 ? +1 : -1;
    TrappingVerdict tv = classify_nontrapping(field, s, {y}, {eta}, 64.0,
                                              512.0);
    const bool ok = (direction == +1)
                        ? (tv == TrappingVerdict::forward ||
                           tv == TrappingVerdict::both)
                        : (tv == TrappingVerdict::backward ||
                           tv == TrappingVerdict::both);
    if (!ok)
        throw numerical_error("predict_point: trapped source point");
    ScatteringData sd =
        scattering_data(field, s, {y}, {eta}, direction, scatter_tol);
    if (mode == PredictMode::perturbed_to_free) {
        out.query.spacetime = true;
        out.query.s = s;
        out.query.y = sd.x_asym[0];
        out.query.sigma = -0.5 * sd.xi_asym[0] * sd.xi_asym[0];
        out.query.sigma_set = true;
        out.query.eta = sd.xi_asym[0];
        out.provenance =
            "scattering correspondence: free-side point (s, x_pm, "
            "-xi_pm^2/2, xi_pm)";
        return out;
    }
    // corollary mode: homogeneous query against the solution at time r_obs
    if (direction * r_obs <= direction * s)
        throw schema_error(
            "predict_point: observation time violates the sign constraint");
    out.query.spacetime = false;
    out.query.y = (r_obs - s) * sd.xi_asym[0];
    out.query.eta = sd.xi_asym[0];
    out.provenance =
        "propagated singularity: ((r-s) xi_pm, xi_pm) in HWF(U(r) phi)";
    return out;
}

struct CorrespondenceRecord {
    std::string label;
    bool predicted_singular = false;
    std::string provenance;
    DecayReport measured;
    bool agreement = false;
};

struct CorrespondenceReport {
    std::vector<CorrespondenceRecord> records;
    std::size_t n_agree = 0;

    double agreement_rate() const {
        return records.empty()
                   ? 1.0
                   : static_cast<double>(n_agree) /
                         static_cast<double>(records.size());
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["records"] = nlohmann::json::array();
        for (const auto& r : records) {
            nlohmann::json e;
            e["label"] = r.label;
            e["predicted_singular"] = r.predicted_singular;
            e["provenance"] = r.provenance;
            e["measured"] = r.measured.to_json();
            e["agreement"] = r.agreement;
            j["records"].push_back(e);
        }
        j["n_agree"] = n_agree;
        j["n_total"] = records.size();
        j["agreement_rate"] = agreement_rate();
        return j;
    }

    void write_table(std::ostream& os) const {
        os << "label                          predicted  slope     verdict"
              "        agree\n";
        char buf[160];
        for (const auto& r : records) {
            std::snprintf(buf, sizeof buf, "%-30s %-10s %-9.3f %-14s %s\n",
                          r.label.c_str(),
                          r.predicted_singular ? "singular" : "regular",
                          r.measured.slope,
                          to_string(r.measured.verdict).c_str(),
                          r.agreement ? "yes" : "NO");
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "agreement %zu/%zu\n", n_agree,
                      records.size());
        os << buf;
    }
};

// agreement flag: predicted singular <=> measured slope below threshold
inline CorrespondenceReport make_correspondence(
    std::vector<CorrespondenceRecord> records) {
    CorrespondenceReport rep;
    for (auto& r : records) {
        const bool measured_singular =
            r.measured.verdict != DecayVerdict::rapid_decay;
        r.agreement = (r.predicted_singular == measured_singular);
        if (r.agreement) ++rep.n_agree;
        rep.records.push_back(std::move(r));
    }
    return rep;
}

struct ScanRow {
    double sigma_offset = 0.0;
    double theta = 2.0;
    DecayReport report;
};

// Sweeps the time-frequency center over offsets from the characteristic
// value, for each scaling order theta.
inline std::vector<ScanRow> characteristic_scan(
    const SpacetimeField& u, const CoefficientField* field, const WFQuery& base,
    const std::vector<double>& sigma_offsets,
    const std::vector<double>& thetas = {1.0, 2.0, 3.0}) {
    std::vector<ScanRow> rows;
    const double sigma0 = base.effective_sigma(field);
    for (double th : thetas)
        for (double off : sigma_offsets) {
            WFQuery q = base;
            q.spacetime = true;
            q.sigma = sigma0 + off;
            q.sigma_set = true;
            q.theta = th;
            ScanRow row;
            row.sigma_offset = off;
            row.theta = th;
            row.report = test_qhwf(u, q, QhwfMode::full, field);
            rows.push_back(std::move(row));
        }
    return rows;
}

} // namespace qhlab
