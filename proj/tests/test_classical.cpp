#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qhlab/classical.hpp"
#include "qhlab/coefficients.hpp"
#include "qhlab/symbols.hpp"

using namespace qhlab;

namespace {

CoefficientField identity_field() {
    FieldSpec s;
    s.tag = "identity";
    return build_field(s);
}

CoefficientField bump_field(double A = 0.1) {
    FieldSpec s;
    s.tag = "bump-metric";
    s.amplitude = A;
    s.center = {0.0};
    s.width = 1.0;
    return build_field(s);
}

} // namespace

TEST_CASE("identity field flow is a straight line") {
    CoefficientField f = identity_field();
    Trajectory tr = hamilton_flow(f, -1.0, {2.0}, {1.5}, 3.0, 1e-12);
    CHECK(tr.x.back()[0] == doctest::Approx(2.0 + 4.0 * 1.5).epsilon(1e-10));
    CHECK(tr.xi.back()[0] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("frozen energy is conserved along the flow") {
    CoefficientField f = bump_field();
    const double tol = 1e-10;
    Trajectory tr = hamilton_flow(f, -0.5, {-0.7}, {1.2}, 6.0, tol);
    const double E0 = frozen_energy(f, -0.5, {-0.7}, {1.2});
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        const double E = frozen_energy(f, -0.5, tr.x[k], tr.xi[k]);
        CHECK(std::fabs(E - E0) <= 10.0 * tol * std::max(1.0, E0));
    }
}

TEST_CASE("bump metric points are non-trapping both ways") {
    CoefficientField f = bump_field();
    CHECK(classify_nontrapping(f, -1.0, {0.5}, {1.0}, 16.0, 64.0) ==
          TrappingVerdict::both);
}

TEST_CASE("identity field scattering data is the input point") {
    CoefficientField f = identity_field();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int i = 0; i < 20; ++i) {
        const double s = U(rng), y = U(rng);
        double eta = U(rng);
        if (std::fabs(eta) < 0.3) eta = 0.3;
        ScatteringData sd = scattering_data(f, s, {y}, {eta}, +1, 1e-12);
        CHECK(std::fabs(sd.x_asym[0] - y) <= 1e-10);
        CHECK(std::fabs(sd.xi_asym[0] - eta) <= 1e-10);
    }
}

TEST_CASE("bump metric scattering converges with a finite residual") {
    CoefficientField f = bump_field();
    ScatteringData sd = scattering_data(f, -1.0, {-2.0}, {1.0}, +1, 1e-10);
    CHECK(sd.residual <= 1e-10);
    CHECK(sd.xi_asym[0] > 0.0);
}

TEST_CASE("technical flow with identity field moves nothing but tau") {
    // a = delta, V = 0: dx = dxi = 0 and dtau = 0 as well
    CoefficientField f = identity_field();
    ExtendedPhasePoint p;
    p.t = -1.0;
    p.x = {2.0};
    p.tau = 0.3;
    p.xi = {1.0};
    ExtendedPhasePoint q = technical_flow(f, 0.1, 1.0, p, 1e-12);
    CHECK(q.x[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(q.tau == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(q.xi[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("deformation flow roundtrip is the identity") {
    CoefficientField f = bump_field();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (double h : {0.2, 0.1, 0.05}) {
        for (double kappa : {0.25, 0.5, 1.0}) {
            for (int i = 0; i < 5; ++i) {
                ExtendedPhasePoint p;
                p.t = -1.0 + 0.2 * U(rng);
                p.x = {2.0 * U(rng)};
                p.tau = U(rng);
                p.xi = {1.0 + 0.3 * U(rng)};
                ExtendedPhasePoint q =
                    technical_flow(f, h, kappa, p, 1e-11);
                ExtendedPhasePoint r =
                    technical_flow_inverse(f, h, kappa, q, 1e-11);
                CHECK(std::fabs(r.x[0] - p.x[0]) <= 1e-8);
                CHECK(std::fabs(r.tau - p.tau) <= 1e-8);
                CHECK(std::fabs(r.xi[0] - p.xi[0]) <= 1e-8);
            }
        }
    }
}

TEST_CASE("reduced flow agrees with the technical flow through the change "
          "of variables") {
    CoefficientField f = bump_field();
    const double h = 0.1, s = -1.0;
    const double y = -0.5, sigma = 0.2, eta = 1.0;

    // technical flow at kappa corresponds to the reduced state at
    // mu = (1 - kappa) s
    for (double kappa : {0.25, 0.5, 0.75, 1.0}) {
        const double mu = (1.0 - kappa) * s;
        ExtendedPhasePoint p0;
        p0.t = s;
        p0.x = {y};
        p0.tau = sigma;
        p0.xi = {eta};
        ExtendedPhasePoint direct = technical_flow(f, h, kappa, p0, 1e-12);
        ReducedTrajectory tr =
            reduced_flow(f, h, s, {y}, sigma, {eta}, mu, 1e-12);
        ExtendedPhasePoint via = reduced_to_technical(
            f, h, s, mu, tr.z.back(), tr.rho, tr.zeta.back());
        CHECK(std::fabs(via.x[0] - direct.x[0]) <= 1e-7);
        CHECK(std::fabs(via.tau - direct.tau) <= 1e-7);
        CHECK(std::fabs(via.xi[0] - direct.xi[0]) <= 1e-7);
    }
}

TEST_CASE("comparison orbit satisfies the scaling identity") {
    // the frozen-coefficient scaled system
    //   dx~/dmu = h^{-1} a(s,x~) xi~,  dxi~/dmu = -h^{-1}/2 da(s,x~) xi~^2
    // integrated from mu = s equals the frozen Hamilton flow evaluated at
    // the rescaled time s + (mu - s)/h
    CoefficientField f = bump_field();
    const double h = 0.125, s = -1.0, y = -0.4, eta = 1.1;
    for (double mu : {-0.75, -0.5, -0.25, 0.0}) {
        auto rhs = [&](double, const StateVec& st, StateVec& out) {
            out.resize(2);
            out[0] = f.a1(s, st[0]) * st[1] / h;
            out[1] = -0.5 * f.a1_dx(s, st[0]) * st[1] * st[1] / h;
        };
        OdeOptions opt;
        opt.abs_tol = opt.rel_tol = 1e-12;
        StateVec scaled =
            integrate_ode(rhs, {y, eta}, s, mu, opt).state;
        Trajectory direct = hamilton_flow(f, s, {y}, {eta},
                                          s + (mu - s) / h, 1e-12, false);
        CHECK(scaled[0] ==
              doctest::Approx(direct.x.back()[0]).epsilon(1e-8));
        CHECK(scaled[1] ==
              doctest::Approx(direct.xi.back()[0]).epsilon(1e-8));
    }
}

TEST_CASE("reduced orbit converges to the comparison orbit as h decreases") {
    CoefficientField f = bump_field();
    const double s = -1.0, y = -0.4, eta = 1.1;
    double prev_gap = 1e300;
    for (double h : {0.25, 0.125, 0.0625, 0.03125}) {
        ReducedTrajectory tr =
            reduced_flow(f, h, s, {y}, 0.0, {eta}, 0.0, 1e-12, true);
        double gap = 0.0;
        const std::size_t stride = std::max<std::size_t>(1, tr.mu.size() / 16);
        for (std::size_t k = 0; k < tr.mu.size(); k += stride) {
            const double mu = tr.mu[k];
            Trajectory cmp = hamilton_flow(f, s, {y}, {eta},
                                           s + (mu - s) / h, 1e-12, false);
            const double xt = cmp.x.back()[0];
            const double xit = cmp.xi.back()[0];
            gap = std::max(gap, std::fabs(tr.zeta[k][0] - xit));
            gap = std::max(
                gap, std::fabs((tr.z[k][0] - (mu - s) / h * tr.zeta[k][0]) -
                               (xt - (mu - s) / h * xit)));
        }
        CHECK(gap <= prev_gap + 1e-9);
        prev_gap = gap;
    }
}

TEST_CASE("high-energy limit tau bookkeeping on the identity field") {
    CoefficientField f = identity_field();
    ExtendedPhasePoint start;
    start.t = -1.0;
    start.x = {2.0};
    start.tau = 0.4;
    start.xi = {1.5};
    std::vector<double> h_seq;
    for (int k = 3; k <= 7; ++k) h_seq.push_back(std::pow(2.0, -k));
    HighEnergyReport rep = highenergy_limit(f, start, h_seq, 1e-11);
    // identity field: x_pm = y, xi_pm = eta, tau shift vanishes
    CHECK(std::fabs(rep.predicted.x[0] - 2.0) <= 1e-10);
    CHECK(std::fabs(rep.predicted.xi[0] - 1.5) <= 1e-10);
    CHECK(std::fabs(rep.predicted.tau - 0.4) <= 1e-10);
    CHECK(rep.discrepancy <= 1e-8);
}

TEST_CASE("mourre diagnostics on the identity field are exact") {
    CoefficientField f = identity_field();
    MourreReport rep = mourre_diagnostics(f, 0.1, -1.0, {0.5}, {1.2});
    CHECK(rep.C <= 0.5 + 1e-8);  // |z| - (mu-s)/h |eta| stays |y| at most
    CHECK(rep.c1 == doctest::Approx(1.44).epsilon(1e-10));
    CHECK(rep.C2 == doctest::Approx(1.44).epsilon(1e-10));
    CHECK(rep.max_energy_drift <= 1e-10);
}

TEST_CASE("mourre constants stay bounded on the bump metric") {
    CoefficientField f = bump_field();
    double prevC = 1e300;
    for (double h : {0.2, 0.1, 0.05}) {
        MourreReport rep = mourre_diagnostics(f, h, -1.0, {-0.5}, {1.0});
        CHECK(rep.c1 > 0.0);
        CHECK(std::isfinite(rep.C7));
        CHECK(rep.C <= prevC + 0.5);  // stable beyond noise
        prevC = rep.C;
    }
}

TEST_CASE("transport residual vanishes for the identity field") {
    CoefficientField f = identity_field();
    PhaseSymbol b = symbol_spacetime_bump(-1.0, 1.0, 0.0, 2.0, 0.0, 2.0,
                                          1.0, 1.0);
    auto beval = [&](double t, double x, double tau, double xi) {
        return std::real(b(t, x, tau, xi));
    };
    ExtendedPhasePoint p;
    p.t = -1.0;
    p.x = {0.3};
    p.tau = 0.1;
    p.xi = {1.0};
    CHECK(transport_residual(f, beval, 0.1, 0.5, p) <= 1e-10);
}

TEST_CASE("transport residual at kappa = 0 is finite-difference small") {
    CoefficientField f = bump_field();
    PhaseSymbol b = symbol_spacetime_bump(-1.0, 1.0, 0.0, 2.0, 0.0, 2.0,
                                          1.0, 1.0);
    auto beval = [&](double t, double x, double tau, double xi) {
        return std::real(b(t, x, tau, xi));
    };
    ExtendedPhasePoint p;
    p.t = -1.0;
    p.x = {0.3};
    p.tau = 0.05;
    p.xi = {1.0};
    CHECK(transport_residual(f, beval, 0.1, 0.0, p) <= 1e-6);
}
