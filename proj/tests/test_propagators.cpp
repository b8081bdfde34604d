#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "qhlab/coefficients.hpp"
#include "qhlab/grid.hpp"
#include "qhlab/propagators.hpp"

using namespace qhlab;

namespace {

double rel_err(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        num += std::norm(a[j] - b[j]);
        den += std::norm(b[j]);
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

CoefficientField bump_field(double amp) {
    FieldSpec spec;
    spec.tag = "bump-metric";
    spec.dimension = 1;
    spec.amplitude = amp;
    spec.center = {0.0};
    spec.width = 1.0;
    return build_field(spec);
}

CoefficientField identity_field() {
    FieldSpec spec;
    spec.tag = "identity";
    spec.dimension = 1;
    return build_field(spec);
}

} // namespace

TEST_CASE("free propagation reverses exactly") {
    GridField1D phi = make_gaussian(16.0, 1024, 1.0, 0.7, 2.0);
    GridField1D back = free_propagate(free_propagate(phi, 1.3), -1.3);
    CHECK(rel_err(back.samples, phi.samples) <= 1e-10);
}

TEST_CASE("free propagation satisfies the group law") {
    GridField1D phi = make_gaussian(16.0, 1024, -0.5, 0.8, 1.0);
    GridField1D two = free_propagate(free_propagate(phi, 0.4), 0.9);
    GridField1D one = free_propagate(phi, 1.3);
    CHECK(rel_err(two.samples, one.samples) <= 1e-10);
}

TEST_CASE("free propagation moves a wave packet classically") {
    const double xi0 = 2.0, t = 1.0;
    GridField1D phi = make_gaussian(16.0, 1024, 0.0, 0.7, xi0);
    GridField1D out = free_propagate(phi, t);
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t j = 0; j < out.N; ++j) {
        const double w = std::norm(out.samples[j]);
        m0 += w;
        m1 += w * out.x(j);
    }
    CHECK(m1 / m0 == doctest::Approx(xi0 * t).epsilon(1e-6));
}

TEST_CASE("crank-nicolson with identity coefficients matches the free flow") {
    CoefficientField f = identity_field();
    GridField1D phi = make_gaussian(16.0, 1024, 0.0, 0.8, 1.5);
    GridField1D cn = perturbed_propagate(f, phi, 0.0, 1.0, 2.5e-4);
    GridField1D fr = free_propagate(phi, 1.0);
    CHECK(rel_err(cn.samples, fr.samples) <= 1e-6);
}

TEST_CASE("crank-nicolson conserves mass") {
    CoefficientField f = bump_field(0.1);
    GridField1D phi = make_gaussian(16.0, 1024, -2.0, 0.8, 1.0);
    const double n0 = phi.norm();
    GridField1D out = perturbed_propagate(f, phi, 0.0, 2.0, 1e-3);
    CHECK(std::fabs(out.norm() - n0) <= 1e-10 * 2.0);
}

TEST_CASE("crank-nicolson self-convergence is second order") {
    CoefficientField f = bump_field(0.1);
    GridField1D phi = make_gaussian(16.0, 512, -1.0, 0.8, 1.0);
    const double T = 0.5;
    GridField1D ref = perturbed_propagate(f, phi, 0.0, T, 1.25e-4);
    std::vector<double> errs;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
        GridField1D u = perturbed_propagate(f, phi, 0.0, T, dt);
        errs.push_back(rel_err(u.samples, ref.samples));
    }
    const double order01 = std::log2(errs[0] / errs[1]);
    const double order12 = std::log2(errs[1] / errs[2]);
    CHECK(std::fabs(order01 - 2.0) <= 0.5);
    CHECK(std::fabs(order12 - 2.0) <= 0.5);
}

TEST_CASE("perturbed propagation runs backward in time") {
    CoefficientField f = bump_field(0.1);
    GridField1D phi = make_gaussian(16.0, 512, 0.5, 0.8, -1.0);
    GridField1D fwd = perturbed_propagate(f, phi, 0.0, 0.5, 1e-3);
    GridField1D back = perturbed_propagate(f, fwd, 0.5, 0.0, 1e-3);
    CHECK(rel_err(back.samples, phi.samples) <= 1e-8);
}

TEST_CASE("band-limit precondition rejects rough data") {
    GridField1D phi(16.0, 256);
    phi.samples.assign(256, cplx(0.0));
    phi.samples[7] = 1.0;  // grid delta: flat spectrum
    CHECK_THROWS_AS(free_propagate(phi, 0.5), resolution_error);
    CoefficientField f = bump_field(0.1);
    CHECK_THROWS_AS(perturbed_propagate(f, phi, 0.0, 0.1, 1e-3),
                    resolution_error);
    // the delta surrogate is mollified enough to pass
    GridField1D d = make_delta_surrogate(16.0, 256, 0.0);
    CHECK(bandlimit_fraction(d) >= 1.0 - 1e-10);
}

TEST_CASE("spacetime assembly pins the initial slice") {
    GridField1D phi = make_gaussian(16.0, 512, 0.0, 0.8, 1.0);
    SpacetimeField u = assemble_spacetime(PropagatorKind::free, nullptr, phi,
                                          -1.0, 1.0, 33);
    CHECK(u.slices.size() == 33);
    CHECK(u.t(16) == doctest::Approx(0.0));
    CHECK(rel_err(u.slices[16].samples, phi.samples) <= 1e-12);
    CHECK(u.provenance.kind == "free");
}

TEST_CASE("perturbed assembly with identity coefficients matches free") {
    CoefficientField f = identity_field();
    GridField1D phi = make_gaussian(16.0, 512, 0.0, 0.8, 1.0);
    SpacetimeField fr = assemble_spacetime(PropagatorKind::free, nullptr, phi,
                                           -0.5, 0.5, 17);
    SpacetimeField pe = assemble_spacetime(PropagatorKind::perturbed, &f, phi,
                                           -0.5, 0.5, 17, 2.5e-4);
    for (std::size_t k = 0; k < fr.N_t; ++k)
        CHECK(rel_err(pe.slices[k].samples, fr.slices[k].samples) <= 1e-6);
    CHECK(pe.provenance.kind == "perturbed");
    CHECK(pe.provenance.field_id == "identity");
}

TEST_CASE("spacetime container round-trips through disk") {
    GridField1D phi = make_windowed_chirp(16.0, 512, 1.0);
    SpacetimeField u = assemble_spacetime(PropagatorKind::free, nullptr, phi,
                                          -0.25, 0.75, 17);
    const auto path =
        std::filesystem::temp_directory_path() / "qhlab_prop_rt.qhsf";
    save_spacetime_field(u, path.string());
    SpacetimeField v = load_spacetime_field(path.string());
    CHECK(v.N_t == u.N_t);
    CHECK(v.t0 == doctest::Approx(u.t0));
    CHECK(v.t1 == doctest::Approx(u.t1));
    CHECK(v.provenance.kind == u.provenance.kind);
    CHECK(v.slices[0].N == u.slices[0].N);
    CHECK(v.slices[0].L == doctest::Approx(u.slices[0].L));
    // payload is stored in single precision
    double worst = 0.0;
    for (std::size_t k = 0; k < u.N_t; ++k)
        for (std::size_t j = 0; j < u.slices[k].N; ++j)
            worst = std::max(worst, std::abs(v.slices[k].samples[j] -
                                             u.slices[k].samples[j]));
    CHECK(worst <= 1e-6);
    std::filesystem::remove(path);
}

TEST_CASE("container rejects corrupted headers") {
    GridField1D phi = make_gaussian(16.0, 256, 0.0, 0.8);
    SpacetimeField u = assemble_spacetime(PropagatorKind::free, nullptr, phi,
                                          0.0, 1.0, 17);
    const auto path =
        std::filesystem::temp_directory_path() / "qhlab_prop_bad.qhsf";
    save_spacetime_field(u, path.string());
    {
        std::FILE* fp = std::fopen(path.string().c_str(), "r+b");
        REQUIRE(fp != nullptr);
        std::fputs("XXXX", fp);
        std::fclose(fp);
    }
    CHECK_THROWS_AS(load_spacetime_field(path.string()), schema_error);
    std::filesystem::remove(path);
}

TEST_CASE("prepared data states are normalized and centered") {
    GridField1D g = make_gaussian(16.0, 512, 1.5, 0.5, 3.0);
    CHECK(g.norm() == doctest::Approx(1.0).epsilon(1e-12));
    GridField1D d = make_delta_surrogate(16.0, 512, -2.0);
    CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-12));
    double peak = 0.0;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < d.N; ++j)
        if (std::abs(d.samples[j]) > peak) {
            peak = std::abs(d.samples[j]);
            arg = j;
        }
    CHECK(d.x(arg) == doctest::Approx(-2.0).epsilon(1e-10));
    GridField1D c = make_windowed_chirp(16.0, 512, 1.0);
    CHECK(c.norm() == doctest::Approx(1.0).epsilon(1e-12));
}
