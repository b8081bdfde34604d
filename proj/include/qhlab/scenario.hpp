#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhlab/classical.hpp"
#include "qhlab/coefficients.hpp"
#include "qhlab/config.hpp"
#include "qhlab/errors.hpp"
#include "qhlab/grid.hpp"
#include "qhlab/manifest.hpp"
#include "qhlab/propagators.hpp"
#include "qhlab/svg.hpp"
#include "qhlab/wavefront.hpp"

namespace qhlab {

struct DataSpec {
    std::string kind = "gaussian";  // gaussian | delta-surrogate | chirp
    double x0 = 0.0;
    double width = 1.0;
    double xi0 = 0.0;
    double beta = 1.0;
};

struct GridSpec {
    double L = 16.0;
    std::size_t N = 1024;
    double t0 = -1.0;
    double t1 = 1.0;
    std::size_t N_t = 64;
    double dt = 1e-3;
};

struct QuerySpec {
    std::vector<double> values;  // numeric slots, mode-dependent
    bool expect_singular = false;
    std::string label;
};

struct Scenario {
    std::string name = "scenario";
    long seed = 0;
    std::string output_dir = "out";
    FieldSpec field;
    DataSpec data;
    GridSpec grid;
    std::vector<double> h_seq = default_h_sequence();
    double threshold = 4.0;
    double radius = 0.5;
    std::string mode = "hwf";  // hwf | qhwf | corollary | free_to_initial
    double r_obs = 1.0;
    std::vector<QuerySpec> sources;   // mode-dependent numeric tuples
    std::vector<QuerySpec> controls;  // explicit extra queries
};

namespace scenario_detail {

inline QuerySpec parse_query(const std::string& s, int n_numbers) {
    QuerySpec q;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        // trim
        std::size_t b = tok.find_first_not_of(" \t");
        std::size_t e = tok.find_last_not_of(" \t");
        if (b == std::string::npos)
            throw schema_error("empty query token in '" + s + "'");
        tok = tok.substr(b, e - b + 1);
        if (tok == "singular" || tok == "regular") {
            q.expect_singular = (tok == "singular");
        } else {
            try {
                q.values.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw schema_error("bad query token '" + tok + "' in '" + s +
                                   "'");
            }
        }
    }
    if (static_cast<int>(q.values.size()) != n_numbers)
        throw schema_error("query '" + s + "' needs " +
                           std::to_string(n_numbers) + " numbers");
    return q;
}

inline GridField1D build_data(const DataSpec& d, const GridSpec& g) {
    if (d.kind == "gaussian")
        return make_gaussian(g.L, g.N, d.x0, d.width, d.xi0);
    if (d.kind == "delta-surrogate")
        return make_delta_surrogate(g.L, g.N, d.x0);
    if (d.kind == "chirp") return make_windowed_chirp(g.L, g.N, d.beta);
    throw schema_error("unknown data kind: " + d.kind);
}

} // namespace scenario_detail

inline Scenario parse_scenario(const Config& cfg) {
    Scenario sc;
    sc.name = cfg.string_or("scenario", "name", "scenario");
    sc.seed = static_cast<long>(cfg.number_or("scenario", "seed", 0.0));
    sc.output_dir = cfg.string_or("scenario", "output_dir", "out/" + sc.name);

    sc.field.tag = cfg.string_or("field", "tag", "identity");
    sc.field.amplitude = cfg.number_or("field", "amplitude", 0.1);
    sc.field.center = {cfg.number_or("field", "center", 0.0)};
    sc.field.width = cfg.number_or("field", "width", 1.0);
    sc.field.coeff = cfg.number_or("field", "coeff", 0.1);
    sc.field.exponent = cfg.number_or("field", "exponent", 0.5);
    sc.field.dimension =
        static_cast<int>(cfg.number_or("field", "dimension", 1.0));

    sc.data.kind = cfg.string_or("data", "kind", "gaussian");
    sc.data.x0 = cfg.number_or("data", "x0", 0.0);
    sc.data.width = cfg.number_or("data", "width", 1.0);
    sc.data.xi0 = cfg.number_or("data", "xi0", 0.0);
    sc.data.beta = cfg.number_or("data", "beta", 1.0);

    sc.grid.L = cfg.number_or("grid", "L", 16.0);
    sc.grid.N = static_cast<std::size_t>(cfg.number_or("grid", "N", 1024.0));
    sc.grid.t0 = cfg.number_or("grid", "t0", -1.0);
    sc.grid.t1 = cfg.number_or("grid", "t1", 1.0);
    sc.grid.N_t =
        static_cast<std::size_t>(cfg.number_or("grid", "N_t", 64.0));
    sc.grid.dt = cfg.number_or("grid", "dt", 1e-3);

    if (cfg.has("detector", "h_exps")) {
        sc.h_seq.clear();
        for (double e : cfg.at("detector", "h_exps").as_number_array())
            sc.h_seq.push_back(std::pow(2.0, -e));
    }
    sc.threshold = cfg.number_or("detector", "threshold", 4.0);
    sc.radius = cfg.number_or("detector", "radius", 0.5);

    sc.mode = cfg.string_or("queries", "mode", "hwf");
    sc.r_obs = cfg.number_or("queries", "r_obs", 1.0);
    const int n_src = (sc.mode == "hwf") ? 2
                      : (sc.mode == "qhwf") ? 4
                                            : 3;  // corollary/free_to_initial
    if (cfg.has("queries", "points"))
        for (const auto& s : cfg.at("queries", "points").as_string_array())
            sc.sources.push_back(scenario_detail::parse_query(s, n_src));
    if (cfg.has("queries", "controls"))
        for (const auto& s : cfg.at("queries", "controls").as_string_array())
            sc.controls.push_back(scenario_detail::parse_query(s, 2));
    if (sc.sources.empty() && sc.controls.empty())
        throw schema_error("scenario: no queries given");
    return sc;
}

struct ScenarioResult {
    CorrespondenceReport report;
    std::string out_dir;
    nlohmann::json meta;
};

inline ScenarioResult run_scenario(const Scenario& sc,
                                   bool write_outputs = true) {
    namespace fs = std::filesystem;
    CoefficientField field = build_field(sc.field);
    GridField1D phi = scenario_detail::build_data(sc.data, sc.grid);
    const bool identity_field = (sc.field.tag == "identity");

    WFQuery base;
    base.radius = sc.radius;
    base.h_seq = sc.h_seq;
    base.threshold = sc.threshold;

    std::vector<CorrespondenceRecord> records;
    std::optional<SpacetimeField> u;        // kept for the heat map
    std::vector<double> pred_t, pred_x;     // predicted singular positions

    auto add_hwf = [&](const GridField1D& target, double y, double eta,
                       bool singular, const std::string& label,
                       const std::string& prov) {
        WFQuery q = base;
        q.spacetime = false;
        q.y = y;
        q.eta = eta;
        CorrespondenceRecord r;
        r.label = label;
        r.predicted_singular = singular;
        r.provenance = prov;
        r.measured = test_hwf(target, q);
        records.push_back(std::move(r));
    };

    if (sc.mode == "hwf") {
        int i = 0;
        for (const auto& qs : sc.sources)
            add_hwf(phi, qs.values[0], qs.values[1], qs.expect_singular,
                    "hwf_" + std::to_string(i++), "declared expectation");
    } else if (sc.mode == "free_to_initial") {
        int i = 0;
        for (const auto& qs : sc.sources) {
            // numeric slots: s, y, eta; the prediction ignores y
            PredictedQuery pq = predict_point(field, qs.values[0],
                                              qs.values[1], qs.values[2],
                                              PredictMode::free_to_initial);
            add_hwf(phi, pq.query.y, pq.query.eta, qs.expect_singular,
                    "f2i_" + std::to_string(i++), pq.provenance);
        }
    } else if (sc.mode == "corollary") {
        GridField1D slice =
            identity_field
                ? free_propagate(phi, sc.r_obs)
                : perturbed_propagate(field, phi, 0.0, sc.r_obs, sc.grid.dt);
        int i = 0;
        for (const auto& qs : sc.sources) {
            PredictedQuery pq =
                predict_point(field, qs.values[0], qs.values[1], qs.values[2],
                              PredictMode::corollary, sc.r_obs);
            add_hwf(slice, pq.query.y, pq.query.eta, qs.expect_singular,
                    "cor_" + std::to_string(i++), pq.provenance);
            if (qs.expect_singular) {
                pred_t.push_back(sc.r_obs);
                pred_x.push_back(pq.query.y);
            }
        }
        for (const auto& qs : sc.controls)
            add_hwf(slice, qs.values[0], qs.values[1], qs.expect_singular,
                    "ctl_" + std::to_string(i++), "declared control");
    } else if (sc.mode == "qhwf") {
        u = assemble_spacetime(
            identity_field ? PropagatorKind::free : PropagatorKind::perturbed,
            &field, phi, sc.grid.t0, sc.grid.t1, sc.grid.N_t, sc.grid.dt,
            sc.field.tag);
        int i = 0;
        for (const auto& qs : sc.sources) {
            WFQuery q = base;
            q.spacetime = true;
            q.s = qs.values[0];
            q.y = qs.values[1];
            q.sigma = qs.values[2];
            q.sigma_set = true;
            q.eta = qs.values[3];
            CorrespondenceRecord r;
            r.label = "qhwf_" + std::to_string(i++);
            r.predicted_singular = qs.expect_singular;
            r.provenance = "declared expectation";
            r.measured = test_qhwf(*u, q, QhwfMode::full, &field);
            records.push_back(std::move(r));
        }
    } else {
        throw schema_error("unknown scenario mode: " + sc.mode);
    }

    ScenarioResult out;
    out.report = make_correspondence(std::move(records));
    out.out_dir = sc.output_dir;
    out.meta["scenario"] = sc.name;
    out.meta["seed"] = sc.seed;
    out.meta["mode"] = sc.mode;
    out.meta["field"] = sc.field.tag;
    out.meta["report"] = out.report.to_json();

    if (!write_outputs) return out;

    fs::create_directories(sc.output_dir);
    Manifest man;
    {
        std::ofstream os(fs::path(sc.output_dir) / "report.json");
        os << out.meta.dump(2) << "\n";
    }
    man.record(sc.output_dir, "report.json");

    SvgPlot decay_plot("decay slopes: " + sc.name, "log2 h", "log2 norm");
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                            "#ff7f0e", "#8c564b", "#17becf", "#e377c2"};
    int ci = 0;
    for (const auto& r : out.report.records) {
        const std::string csv_name = "decay_" + r.label + ".csv";
        std::ofstream os(fs::path(sc.output_dir) / csv_name);
        r.measured.write_csv(os);
        os.close();
        man.record(sc.output_dir, csv_name);
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < r.measured.h_values.size(); ++i) {
            if (r.measured.norms[i] <= 0.0) continue;
            lx.push_back(std::log2(r.measured.h_values[i]));
            ly.push_back(std::log2(r.measured.norms[i]));
        }
        decay_plot.add_curve(lx, ly, colors[ci % 8], r.label);
        ++ci;
    }
    decay_plot.write((fs::path(sc.output_dir) / "decay.svg").string());
    man.record(sc.output_dir, "decay.svg");

    if (u) {
        std::vector<std::vector<double>> rows;
        const std::size_t stride_t = std::max<std::size_t>(1, u->N_t / 64);
        const std::size_t stride_x = std::max<std::size_t>(1, u->N() / 256);
        for (std::size_t k = 0; k < u->N_t; k += stride_t) {
            std::vector<double> row;
            for (std::size_t j = 0; j < u->N(); j += stride_x)
                row.push_back(std::norm(u->slices[k].samples[j]));
            rows.push_back(std::move(row));
        }
        write_heatmap_svg(
            (fs::path(sc.output_dir) / "heatmap.svg").string(), rows, u->t0,
            u->t1, -u->L(), u->L());
        man.record(sc.output_dir, "heatmap.svg");
    }

    if (sc.mode == "corollary" || sc.mode == "free_to_initial") {
        SvgPlot orbit_plot("classical orbits: " + sc.name, "t", "x");
        int k = 0;
        for (const auto& qs : sc.sources) {
            Trajectory tr = hamilton_flow(field, qs.values[0], {qs.values[1]},
                                          {qs.values[2]},
                                          qs.values[0] + 8.0, 1e-10);
            std::vector<double> ts, xs;
            for (std::size_t i = 0; i < tr.times.size(); ++i) {
                ts.push_back(tr.times[i]);
                xs.push_back(tr.x[i][0]);
            }
            orbit_plot.add_curve(ts, xs, colors[k % 8],
                                 "orbit " + std::to_string(k));
            ++k;
        }
        if (!pred_t.empty())
            orbit_plot.add_points(pred_t, pred_x, "#d62728",
                                  "predicted singular");
        orbit_plot.write((fs::path(sc.output_dir) / "orbits.svg").string());
        man.record(sc.output_dir, "orbits.svg");
    }

    man.write(sc.output_dir);
    return out;
}

inline ScenarioResult run_scenario_file(const std::string& path,
                                        const std::string& out_override = "",
                                        bool write_outputs = true) {
    Config cfg = Config::parse_file(path);
    Scenario sc = parse_scenario(cfg);
    const char* env = std::getenv("QHLAB_OUTPUT_DIR");
    if (env != nullptr && *env != '\0')
        sc.output_dir = std::string(env) + "/" + sc.name;
    if (!out_override.empty()) sc.output_dir = out_override;
    return run_scenario(sc, write_outputs);
}

} // namespace qhlab
