// qhlab: scenario-driven batch runner and module front-ends for the
// quasi-homogeneous wave front toolkit.
//
// Exit codes: 0 success, 1 failed check, 2 schema error, 3 numerical
// failure, 4 margin/resolution violation.

#include <cmath>
#include <complex>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qhlab/classical.hpp"
#include "qhlab/coefficients.hpp"
#include "qhlab/decay.hpp"
#include "qhlab/errors.hpp"
#include "qhlab/grid.hpp"
#include "qhlab/manifest.hpp"
#include "qhlab/partition.hpp"
#include "qhlab/propagators.hpp"
#include "qhlab/scenario.hpp"
#include "qhlab/symbols.hpp"
#include "qhlab/wavefront.hpp"
#include "qhlab/weyl.hpp"

using namespace qhlab;

namespace {

std::vector<double> parse_numbers(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
}

CoefficientField field_from_flags(const std::string& tag, double amplitude,
                                  double center, double width, double coeff,
                                  double exponent) {
    FieldSpec fs;
    fs.tag = tag;
    fs.amplitude = amplitude;
    fs.center = {center};
    fs.width = width;
    fs.coeff = coeff;
    fs.exponent = exponent;
    return build_field(fs);
}

void print_json_or_text(const nlohmann::json& j, bool as_json,
                        const std::string& text) {
    if (as_json)
        std::cout << j.dump(2) << "\n";
    else
        std::cout << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quasi-homogeneous wave front toolkit"};
    app.require_subcommand(1);

    std::string field_tag = "identity";
    double amplitude = 0.1, center = 0.0, width = 1.0, coeff = 0.1,
           exponent = 0.5;
    bool as_json = false;
    std::string csv_path;
    int jobs = 1;
    if (const char* env = std::getenv("QHLAB_JOBS"))
        jobs = std::max(1, std::atoi(env));
    app.add_flag("--json", as_json, "emit JSON instead of text");
    app.add_option("--csv", csv_path, "write CSV output to this path");
    app.add_option("--jobs", jobs, "worker count for independent stages");
    auto add_field_flags = [&](CLI::App* cmd) {
        cmd->add_option("--field", field_tag,
                        "field registry tag (identity | bump-metric | "
                        "sublinear-potential | composite)");
        cmd->add_option("--amplitude", amplitude, "bump amplitude");
        cmd->add_option("--center", center, "bump center");
        cmd->add_option("--width", width, "bump width");
        cmd->add_option("--coeff", coeff, "potential coefficient");
        cmd->add_option("--exponent", exponent, "potential decay exponent");
    };

    // flow
    auto* cmd_flow = app.add_subcommand("flow", "frozen-time Hamilton flow");
    std::string flow_point = "-1,2,1.5";
    double flow_tend = 4.0, tol = 1e-10;
    add_field_flags(cmd_flow);
    cmd_flow->add_option("--point", flow_point, "s,y,eta");
    cmd_flow->add_option("--t-end", flow_tend, "final time");
    cmd_flow->add_option("--tol", tol, "integrator tolerance");

    // scatter
    auto* cmd_scatter = app.add_subcommand("scatter", "scattering data");
    std::string sc_point = "-1,2,1.5", sc_dir = "+";
    add_field_flags(cmd_scatter);
    cmd_scatter->add_option("--point", sc_point, "s,y,eta");
    cmd_scatter->add_option("--dir", sc_dir, "+ or -");
    cmd_scatter->add_option("--tol", tol, "residual tolerance");

    // deform
    auto* cmd_deform =
        app.add_subcommand("deform", "rescaled deformation flow");
    std::string df_point = "-1,-5,0,1";
    double df_h = 0.1, df_kappa = 1.0;
    bool df_highenergy = false;
    add_field_flags(cmd_deform);
    cmd_deform->add_option("--point", df_point, "t,x,tau,xi");
    cmd_deform->add_option("--scale", df_h, "scale parameter h");
    cmd_deform->add_option("--kappa", df_kappa, "deformation parameter");
    cmd_deform->add_flag("--highenergy", df_highenergy,
                         "extrapolate h -> 0 and compare with scattering");
    cmd_deform->add_option("--tol", tol, "integrator tolerance");

    // partition-check
    auto* cmd_part =
        app.add_subcommand("partition-check", "partition of unity checks");
    double pt_eps = 0.25;
    long pt_samples = 10000;
    cmd_part->add_option("--eps", pt_eps, "partition epsilon");
    cmd_part->add_option("--samples", pt_samples, "sample count");

    // egorov-check
    auto* cmd_egorov = app.add_subcommand(
        "egorov-check", "free-propagator conjugation identity");
    double eg_t = 1.0;
    std::size_t eg_n = 1024;
    long eg_seed = 7;
    cmd_egorov->add_option("--t", eg_t, "conjugation time");
    cmd_egorov->add_option("--n", eg_n, "grid size");
    cmd_egorov->add_option("--seed", eg_seed, "random state seed");

    // detect
    auto* cmd_detect = app.add_subcommand("detect", "wave front detectors");
    std::string dt_data = "gaussian", dt_query = "1,1",
                dt_mode = "hwf";
    double dt_L = 16.0, dt_beta = 1.0, dt_x0 = 0.0, dt_width = 1.0,
           dt_radius = 0.5, dt_threshold = 4.0, dt_t0 = -1.0, dt_t1 = 1.0,
           dt_dt = 1e-3;
    std::size_t dt_N = 1024, dt_Nt = 64;
    add_field_flags(cmd_detect);
    cmd_detect->add_option("--data", dt_data,
                           "gaussian | delta-surrogate | chirp");
    cmd_detect->add_option("--query", dt_query,
                           "hwf: y,eta; qhwf: s,y,sigma,eta");
    cmd_detect->add_option("--mode", dt_mode,
                           "hwf | qhwf-full | qhwf-reduced");
    cmd_detect->add_option("--L", dt_L, "box half-length");
    cmd_detect->add_option("--N", dt_N, "grid size");
    cmd_detect->add_option("--beta", dt_beta, "chirp rate");
    cmd_detect->add_option("--x0", dt_x0, "data center");
    cmd_detect->add_option("--data-width", dt_width, "gaussian width");
    cmd_detect->add_option("--radius", dt_radius, "symbol radius");
    cmd_detect->add_option("--threshold", dt_threshold, "rapid-decay slope");
    cmd_detect->add_option("--t0", dt_t0, "time window start");
    cmd_detect->add_option("--t1", dt_t1, "time window end");
    cmd_detect->add_option("--N-t", dt_Nt, "time grid size");
    cmd_detect->add_option("--dt", dt_dt, "solver step");

    // verify
    auto* cmd_verify = app.add_subcommand(
        "verify", "run a scenario's correspondence checks without files");
    std::string vf_config;
    cmd_verify->add_option("--config", vf_config, "scenario config path")
        ->required();

    // run
    auto* cmd_run = app.add_subcommand("run", "run a scenario end to end");
    std::string rn_config, rn_out;
    bool rn_check = false;
    cmd_run->add_option("--config", rn_config, "scenario config path")
        ->required();
    cmd_run->add_option("--out", rn_out, "output directory override");
    cmd_run->add_flag("--check", rn_check,
                      "re-verify the MANIFEST of a previous run");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_flow->parsed()) {
            auto p = parse_numbers(flow_point);
            if (p.size() != 3) throw schema_error("--point needs s,y,eta");
            CoefficientField f = field_from_flags(field_tag, amplitude,
                                                  center, width, coeff,
                                                  exponent);
            Trajectory tr =
                hamilton_flow(f, p[0], {p[1]}, {p[2]}, flow_tend, tol);
            if (!csv_path.empty()) {
                std::ofstream os(csv_path);
                tr.write_csv(os);
            }
            nlohmann::json j;
            j["samples"] = tr.times.size();
            j["x_final"] = tr.x.back()[0];
            j["xi_final"] = tr.xi.back()[0];
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "flow: %zu samples, x(t_end)=%.12g xi(t_end)=%.12g\n",
                          tr.times.size(), tr.x.back()[0], tr.xi.back()[0]);
            print_json_or_text(j, as_json, buf);
        } else if (cmd_scatter->parsed()) {
            auto p = parse_numbers(sc_point);
            if (p.size() != 3) throw schema_error("--point needs s,y,eta");
            CoefficientField f = field_from_flags(field_tag, amplitude,
                                                  center, width, coeff,
                                                  exponent);
            const int dir = (sc_dir == "-") ? -1 : +1;
            ScatteringData sd =
                scattering_data(f, p[0], {p[1]}, {p[2]}, dir, tol);
            nlohmann::json j;
            j["x_pm"] = sd.x_asym[0];
            j["xi_pm"] = sd.xi_asym[0];
            j["horizon"] = sd.horizon;
            j["residual"] = sd.residual;
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "x%s=%.12g, xi%s=%.12g (horizon %g, residual %.3g)\n",
                          sc_dir.c_str(), sd.x_asym[0], sc_dir.c_str(),
                          sd.xi_asym[0], sd.horizon, sd.residual);
            print_json_or_text(j, as_json, buf);
        } else if (cmd_deform->parsed()) {
            auto p = parse_numbers(df_point);
            if (p.size() != 4) throw schema_error("--point needs t,x,tau,xi");
            CoefficientField f = field_from_flags(field_tag, amplitude,
                                                  center, width, coeff,
                                                  exponent);
            ExtendedPhasePoint pt;
            pt.t = p[0];
            pt.x = {p[1]};
            pt.tau = p[2];
            pt.xi = {p[3]};
            if (df_highenergy) {
                std::vector<double> h_seq;
                for (int k = 3; k <= 7; ++k)
                    h_seq.push_back(std::pow(2.0, -k));
                HighEnergyReport rep = highenergy_limit(f, pt, h_seq, tol);
                nlohmann::json j;
                j["extrapolated"] = {rep.extrapolated.t,
                                     rep.extrapolated.x[0],
                                     rep.extrapolated.tau,
                                     rep.extrapolated.xi[0]};
                j["predicted"] = {rep.predicted.t, rep.predicted.x[0],
                                  rep.predicted.tau, rep.predicted.xi[0]};
                j["discrepancy"] = rep.discrepancy;
                char buf[200];
                std::snprintf(buf, sizeof buf,
                              "high-energy limit: extrapolated (%.8g, %.8g, "
                              "%.8g), predicted (%.8g, %.8g, %.8g), "
                              "discrepancy %.3g\n",
                              rep.extrapolated.x[0], rep.extrapolated.tau,
                              rep.extrapolated.xi[0], rep.predicted.x[0],
                              rep.predicted.tau, rep.predicted.xi[0],
                              rep.discrepancy);
                print_json_or_text(j, as_json, buf);
            } else {
                ExtendedPhasePoint q =
                    technical_flow(f, df_h, df_kappa, pt, tol);
                nlohmann::json j;
                j["image"] = {q.t, q.x[0], q.tau, q.xi[0]};
                char buf[160];
                std::snprintf(buf, sizeof buf,
                              "Phi_h(%g): (t,x,tau,xi) = (%.12g, %.12g, "
                              "%.12g, %.12g)\n",
                              df_kappa, q.t, q.x[0], q.tau, q.xi[0]);
                print_json_or_text(j, as_json, buf);
            }
        } else if (cmd_part->parsed()) {
            PartitionFamily part = build_partition(pt_eps);
            std::mt19937_64 rng(12345);
            std::uniform_real_distribution<double> U(-3.0, 3.0);
            std::uniform_real_distribution<double> Ulog(-3.0, 6.0);
            double worst = 0.0;
            for (long i = 0; i < pt_samples; ++i) {
                const double mu = U(rng);
                const double nu = std::pow(2.0, Ulog(rng));
                worst = std::max(worst,
                                 std::fabs(part.shifted_sum(mu, nu) - 1.0));
            }
            const bool pass = worst <= 1e-12;
            nlohmann::json j;
            j["max_deviation"] = worst;
            j["pass"] = pass;
            char buf[120];
            std::snprintf(buf, sizeof buf, "max |sum - 1| = %.3g  %s\n",
                          worst, pass ? "PASS" : "FAIL");
            print_json_or_text(j, as_json, buf);
            return pass ? 0 : 1;
        } else if (cmd_egorov->parsed()) {
            const double L = 32.0;
            if (eg_n < 2048) eg_n = 2048;
            std::mt19937_64 rng(static_cast<std::uint64_t>(eg_seed));
            std::normal_distribution<double> G(0.0, 1.0);
            GridField1D v(L, eg_n);
            // random band-limited state under a gaussian envelope: the
            // midpoint scheme wraps lags on the doubled grid, so the state
            // must stay clear of the box edge
            std::vector<cplx> spec(eg_n, cplx(0.0));
            for (std::size_t m = 0; m < eg_n; ++m)
                if (std::labs(GridField1D::mode_of(m, eg_n)) <= 6)
                    spec[m] = cplx(G(rng), G(rng));
            v.samples = ifft(std::move(spec));
            for (std::size_t j = 0; j < eg_n; ++j) {
                const double x = v.x(j);
                v.samples[j] *= std::exp(-x * x / 2.0);
            }
            PhaseSymbol a = symbol_bump2(0.5, 1.0, 2.0, 1.5);
            // route 1: e^{itK} a^W e^{-itK} v
            GridField1D w1 = free_propagate(
                weyl_apply(a, WeylMode::spatial_x_hp,
                           free_propagate(v, eg_t, false), 1.0),
                -eg_t, false);
            // route 2: (a o shear)^W v
            GridField1D w2 = weyl_apply(egorov_conjugate(a, eg_t),
                                        WeylMode::spatial_x_hp, v, 1.0);
            double num = 0.0, den = 0.0;
            for (std::size_t jx = 0; jx < eg_n; ++jx) {
                num += std::norm(w1.samples[jx] - w2.samples[jx]);
                den += std::norm(v.samples[jx]);
            }
            const double rel = std::sqrt(num / den);
            const bool pass = rel <= 1e-8;
            nlohmann::json j;
            j["relative_error"] = rel;
            j["pass"] = pass;
            char buf[120];
            std::snprintf(buf, sizeof buf, "relative error = %.3g  %s\n", rel,
                          pass ? "PASS" : "FAIL");
            print_json_or_text(j, as_json, buf);
            return pass ? 0 : 1;
        } else if (cmd_detect->parsed()) {
            CoefficientField f = field_from_flags(field_tag, amplitude,
                                                  center, width, coeff,
                                                  exponent);
            DataSpec ds;
            ds.kind = dt_data;
            ds.x0 = dt_x0;
            ds.width = dt_width;
            ds.beta = dt_beta;
            GridSpec gs;
            gs.L = dt_L;
            gs.N = dt_N;
            gs.t0 = dt_t0;
            gs.t1 = dt_t1;
            gs.N_t = dt_Nt;
            gs.dt = dt_dt;
            GridField1D phi = scenario_detail::build_data(ds, gs);
            auto q = parse_numbers(dt_query);
            WFQuery query;
            query.radius = dt_radius;
            query.threshold = dt_threshold;
            DecayReport rep;
            if (dt_mode == "hwf") {
                if (q.size() != 2) throw schema_error("--query needs y,eta");
                query.y = q[0];
                query.eta = q[1];
                rep = test_hwf(phi, query);
            } else {
                if (q.size() != 4)
                    throw schema_error("--query needs s,y,sigma,eta");
                query.spacetime = true;
                query.s = q[0];
                query.y = q[1];
                query.sigma = q[2];
                query.sigma_set = true;
                query.eta = q[3];
                SpacetimeField u = assemble_spacetime(
                    field_tag == "identity" ? PropagatorKind::free
                                            : PropagatorKind::perturbed,
                    &f, phi, gs.t0, gs.t1, gs.N_t, gs.dt, field_tag);
                rep = test_qhwf(u, query,
                                dt_mode == "qhwf-reduced" ? QhwfMode::reduced
                                                          : QhwfMode::full,
                                &f);
            }
            if (!csv_path.empty()) {
                std::ofstream os(csv_path);
                rep.write_csv(os);
            }
            char buf[160];
            std::snprintf(buf, sizeof buf, "slope = %.4g, verdict = %s\n",
                          rep.slope, to_string(rep.verdict).c_str());
            print_json_or_text(rep.to_json(), as_json, buf);
        } else if (cmd_verify->parsed()) {
            ScenarioResult res = run_scenario_file(vf_config, "", false);
            if (as_json)
                std::cout << res.report.to_json().dump(2) << "\n";
            else
                res.report.write_table(std::cout);
            return res.report.n_agree == res.report.records.size() ? 0 : 1;
        } else if (cmd_run->parsed()) {
            if (rn_check) {
                Config cfg = Config::parse_file(rn_config);
                Scenario sc = parse_scenario(cfg);
                const std::string dir =
                    rn_out.empty() ? sc.output_dir : rn_out;
                auto bad = Manifest::check(dir);
                if (bad.empty()) {
                    std::cout << "MANIFEST OK (" << dir << ")\n";
                    return 0;
                }
                for (const auto& b : bad)
                    std::cout << "hash mismatch: " << b << "\n";
                return 1;
            }
            ScenarioResult res = run_scenario_file(rn_config, rn_out, true);
            res.report.write_table(std::cout);
            std::cout << "outputs in " << res.out_dir << "\n";
            return res.report.n_agree == res.report.records.size() ? 0 : 1;
        }
    } catch (const schema_error& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const margin_error& e) {
        std::cerr << "margin violation: " << e.what() << "\n";
        return 4;
    } catch (const resolution_error& e) {
        std::cerr << "resolution violation: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
