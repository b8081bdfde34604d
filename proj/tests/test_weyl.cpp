#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qhlab/decay.hpp"
#include "qhlab/fft.hpp"
#include "qhlab/grid.hpp"
#include "qhlab/propagators.hpp"
#include "qhlab/symbols.hpp"
#include "qhlab/weyl.hpp"
#include "support/weyl_oracle.hpp"

using namespace qhlab;

namespace {

GridField1D random_bandlimited(double L, std::size_t N, std::uint64_t seed,
                               std::size_t band_div = 8) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> G(0.0, 1.0);
    std::vector<cplx> spec(N, cplx(0.0));
    for (std::size_t m = 0; m < N; ++m)
        if (std::labs(GridField1D::mode_of(m, N)) <=
            static_cast<long>(N / band_div))
            spec[m] = cplx(G(rng), G(rng));
    GridField1D v(L, N);
    v.samples = ifft(std::move(spec));
    const double n = v.norm();
    for (auto& s : v.samples) s /= n;
    return v;
}

double rel_err(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        num += std::norm(a[j] - b[j]);
        den += std::norm(b[j]);
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

// band-limited state with a gaussian envelope: the midpoint scheme treats
// wrapped lags on the doubled grid, so states must stay clear of the box edge
GridField1D localized_state(double L, std::size_t N, std::uint64_t seed,
                            long band = 6, double env = 2.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> G(0.0, 1.0);
    std::vector<cplx> spec(N, cplx(0.0));
    for (std::size_t m = 0; m < N; ++m)
        if (std::labs(GridField1D::mode_of(m, N)) <= band)
            spec[m] = cplx(G(rng), G(rng));
    auto noise = ifft(std::move(spec));
    GridField1D v(L, N);
    v.samples.resize(N);
    for (std::size_t j = 0; j < N; ++j) {
        const double x = v.x(j);
        v.samples[j] = noise[j] * std::exp(-x * x / env);
    }
    const double n = v.norm();
    for (auto& s : v.samples) s /= n;
    return v;
}

cplx inner(const GridField1D& a, const GridField1D& b) {
    cplx s(0.0);
    for (std::size_t j = 0; j < a.N; ++j)
        s += std::conj(a.samples[j]) * b.samples[j];
    return s * a.dx();
}

} // namespace

TEST_CASE("fft roundtrip and Parseval") {
    GridField1D v = random_bandlimited(8.0, 256, 3);
    auto spec = fft(v.samples);
    auto back = ifft(spec);
    CHECK(rel_err(back, v.samples) <= 1e-13);
    double e1 = 0.0, e2 = 0.0;
    for (const auto& s : v.samples) e1 += std::norm(s);
    for (const auto& s : spec) e2 += std::norm(s);
    CHECK(e1 == doctest::Approx(e2 / static_cast<double>(v.N)).epsilon(1e-12));
}

TEST_CASE("identity symbol acts as the identity on interior data") {
    GridField1D u = make_gaussian(8.0, 256, 0.0, 0.5);
    PhaseSymbol one = symbol_plateau2(0.0, 0.0, 3.0, 40.0);
    GridField1D v = weyl_apply(one, WeylMode::spatial_x_hp, u, 0.1);
    // compare on the interior where the plateau is exactly 1
    double worst = 0.0;
    for (std::size_t j = 0; j < u.N; ++j)
        if (std::fabs(u.x(j)) < 2.0)
            worst = std::max(worst, std::abs(v.samples[j] - u.samples[j]));
    CHECK(worst <= 1e-10);
}

TEST_CASE("x-only symbol is the multiplication operator") {
    GridField1D u = random_bandlimited(8.0, 256, 17);
    auto g = [](double x) { return std::cos(x) * std::exp(-x * x / 9.0); };
    PhaseSymbol a = symbol_x_only(g, Interval{-6.0, 6.0});
    GridField1D v = weyl_apply(a, WeylMode::spatial_x_hp, u, 0.25);
    double worst = 0.0;
    for (std::size_t j = 0; j < u.N; ++j)
        worst = std::max(worst,
                         std::abs(v.samples[j] - g(u.x(j)) * u.samples[j]));
    CHECK(worst <= 1e-10);
}

TEST_CASE("xi-only symbol is the Fourier multiplier") {
    GridField1D u = random_bandlimited(8.0, 256, 29);
    auto g = [](double xi) { return std::exp(-xi * xi); };
    PhaseSymbol a = symbol_xi_only(g, Interval{});
    const double h = 0.5;
    GridField1D v = weyl_apply(a, WeylMode::spatial_x_hp, u, h);
    auto spec = fft(u.samples);
    for (std::size_t m = 0; m < u.N; ++m)
        spec[m] *= g(h * u.xi_of_mode(GridField1D::mode_of(m, u.N)));
    auto expect = ifft(std::move(spec));
    CHECK(rel_err(v.samples, expect) <= 1e-12);
}

TEST_CASE("fast paths match the dense quadrature oracle") {
    const std::size_t N = 256;
    const double L = 8.0;
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        GridField1D u = random_bandlimited(L, N, 200 + rep);
        const double xc = U(rng), xic = 2.0 * U(rng);
        const double rx = 1.5 + U(rng) * 0.5, rxi = 1.5 + U(rng) * 0.5;
        PhaseSymbol a = symbol_bump2(xc, xic, rx, rxi);
        for (WeylMode mode :
             {WeylMode::spatial_x_hp, WeylMode::spatial_hx_hp}) {
            const double h = mode == WeylMode::spatial_hx_hp ? 0.9 : 0.4;
            GridField1D fast = weyl_apply(a, mode, u, h);
            const bool scale_x = (mode == WeylMode::spatial_hx_hp);
            auto sym = [&](double x, double zeta) {
                return a(scale_x ? h * x : x, h * zeta);
            };
            auto dense =
                qhlab_test::weyl_dense_oracle(sym, -L, u.dx(), u.samples);
            CHECK(rel_err(fast.samples, dense) <= 1e-8);
        }
    }
}

TEST_CASE("general streaming path matches the oracle on a sheared symbol") {
    const std::size_t N = 128;
    const double L = 8.0;
    GridField1D u = random_bandlimited(L, N, 71);
    PhaseSymbol a = egorov_conjugate(symbol_bump2(0.2, 0.8, 1.0, 1.0), 0.7);
    GridField1D fast = weyl_apply(a, WeylMode::spatial_x_hp, u, 0.5);
    auto sym = [&](double x, double zeta) { return a(x, 0.5 * zeta); };
    auto dense = qhlab_test::weyl_dense_oracle(sym, -L, u.dx(), u.samples);
    CHECK(rel_err(fast.samples, dense) <= 1e-8);
}

TEST_CASE("weyl_apply is linear in u and a") {
    GridField1D u = random_bandlimited(8.0, 128, 5);
    GridField1D v = random_bandlimited(8.0, 128, 6);
    PhaseSymbol a = symbol_bump2(0.0, 1.0, 1.5, 1.5);
    GridField1D au = weyl_apply(a, WeylMode::spatial_x_hp, u, 0.3);
    GridField1D av = weyl_apply(a, WeylMode::spatial_x_hp, v, 0.3);
    GridField1D w = u;
    for (std::size_t j = 0; j < u.N; ++j)
        w.samples[j] = u.samples[j] + cplx(0.0, 2.0) * v.samples[j];
    GridField1D aw = weyl_apply(a, WeylMode::spatial_x_hp, w, 0.3);
    double worst = 0.0;
    for (std::size_t j = 0; j < u.N; ++j)
        worst = std::max(worst, std::abs(aw.samples[j] - au.samples[j] -
                                         cplx(0.0, 2.0) * av.samples[j]));
    CHECK(worst <= 1e-10);
}

TEST_CASE("real symbols quantize to self-adjoint operators") {
    GridField1D u = random_bandlimited(8.0, 256, 8);
    GridField1D v = random_bandlimited(8.0, 256, 9);
    PhaseSymbol a = symbol_bump2(0.3, -0.7, 1.5, 1.8);
    GridField1D au = weyl_apply(a, WeylMode::spatial_x_hp, u, 0.3);
    GridField1D av = weyl_apply(a, WeylMode::spatial_x_hp, v, 0.3);
    // <v, A u> = <A v, u>
    const cplx lhs = inner(v, au);
    const cplx rhs = std::conj(inner(u, av));
    CHECK(std::abs(lhs - rhs) <= 1e-9);
    CHECK(std::fabs(std::imag(inner(u, au))) <= 1e-9);
}

TEST_CASE("margin and aliasing policies") {
    GridField1D u = make_gaussian(8.0, 256, 0.0, 0.5);
    PhaseSymbol far = symbol_bump2(7.5, 1.0, 0.4, 0.5);
    CHECK_THROWS_AS(weyl_apply(far, WeylMode::spatial_x_hp, u, 0.3),
                    margin_error);
    // scaled support y/h leaving the margin in (hx, hp) mode
    PhaseSymbol near_sym = symbol_bump2(3.0, 1.0, 0.4, 0.5);
    CHECK_THROWS_AS(weyl_apply(near_sym, WeylMode::spatial_hx_hp, u, 0.1),
                    margin_error);
    std::vector<std::string> warnings;
    PhaseSymbol fast_osc = symbol_bump2(0.0, 40.0, 0.5, 0.5);
    (void)weyl_apply(fast_osc, WeylMode::spatial_x_hp, u, 0.01, &warnings);
    CHECK(!warnings.empty());
}

TEST_CASE("egorov shear updates symbol and support") {
    PhaseSymbol a = symbol_bump2(0.0, 1.0, 1.0, 0.5);
    PhaseSymbol b = egorov_conjugate(a, 2.0);
    CHECK(std::real(b(-2.0 * 1.0 + 0.0, 1.0)) ==
          doctest::Approx(std::real(a(0.0, 1.0))).epsilon(1e-14));
    CHECK(b.support[0].lo == doctest::Approx(-1.0 - 3.0));
    CHECK(b.support[0].hi == doctest::Approx(1.0 - 1.0));
    // t = 0 leaves the symbol unchanged
    PhaseSymbol c = egorov_conjugate(a, 0.0);
    CHECK(std::real(c(0.2, 0.9)) ==
          doctest::Approx(std::real(a(0.2, 0.9))).epsilon(1e-14));
    // xi-only symbols are invariant under the shear
    PhaseSymbol g = symbol_xi_only([](double xi) { return std::exp(-xi * xi); },
                                   Interval{});
    PhaseSymbol gs = egorov_conjugate(g, 3.0);
    CHECK(std::real(gs(1.7, -0.4)) ==
          doctest::Approx(std::real(g(1.7, -0.4))).epsilon(1e-14));
}

TEST_CASE("operator-level egorov identity on the free propagator") {
    const std::size_t N = 2048;
    const double L = 32.0;
    for (double t : {0.5, 1.0, 2.0}) {
        GridField1D v = localized_state(L, N, 40 + static_cast<int>(4 * t));
        PhaseSymbol a = symbol_bump2(0.5, 1.0, 2.0, 1.5);
        GridField1D w1 = free_propagate(
            weyl_apply(a, WeylMode::spatial_x_hp, free_propagate(v, t, false),
                       1.0),
            -t, false);
        GridField1D w2 = weyl_apply(egorov_conjugate(a, t),
                                    WeylMode::spatial_x_hp, v, 1.0);
        CHECK(rel_err(w1.samples, w2.samples) <= 1e-8);
    }
}

TEST_CASE("decay_order recovers planted power laws") {
    std::vector<double> h, n3, nc, nnoisy;
    for (int k = 1; k <= 8; ++k) {
        const double hv = std::pow(2.0, -k);
        h.push_back(hv);
        n3.push_back(hv * hv * hv);
        nc.push_back(0.37);
        nnoisy.push_back(hv * hv * hv * (1.0 + 0.05 * (k % 2 ? 1.0 : -1.0)));
    }
    DecayReport r3 = decay_order(h, n3, 4.0);
    CHECK(r3.slope == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r3.verdict == DecayVerdict::finite_order);
    DecayReport rc = decay_order(h, nc, 4.0);
    CHECK(rc.slope == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rc.verdict == DecayVerdict::non_decaying);
    DecayReport rn = decay_order(h, nnoisy, 4.0);
    CHECK(std::fabs(rn.slope - 3.0) <= 0.15);
}

TEST_CASE("decay_order input validation") {
    std::vector<double> h{0.5, 0.25, 0.125, 0.0625, 0.03125};
    std::vector<double> n(5, 1.0);
    CHECK_THROWS_AS(decay_order(h, n, 4.0), schema_error);  // < 6 pairs
    std::vector<double> h6{0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625};
    std::vector<double> tiny(6, 1e-17);  // everything clamps away
    CHECK_THROWS_AS(decay_order(h6, tiny, 4.0), numerical_error);
    std::vector<double> up{0.25, 0.5, 0.125, 0.0625, 0.03125, 0.015625};
    CHECK_THROWS_AS(decay_order(up, tiny, 4.0), schema_error);
}

TEST_CASE("decay report serialization") {
    std::vector<double> h, n;
    for (int k = 1; k <= 6; ++k) {
        h.push_back(std::pow(2.0, -k));
        n.push_back(std::pow(2.0, -5.0 * k));
    }
    DecayReport r = decay_order(h, n, 4.0);
    CHECK(r.verdict == DecayVerdict::rapid_decay);
    auto j = r.to_json();
    CHECK(j["verdict"] == "rapid-decay");
    CHECK(j["h_values"].size() == 6);
    std::ostringstream os;
    r.write_csv(os);
    CHECK(os.str().substr(0, 7) == "h,norm\n");
}
