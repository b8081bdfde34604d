#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "qhlab/errors.hpp"
#include "qhlab/fft.hpp"
#include "qhlab/grid.hpp"
#include "qhlab/symbols.hpp"

namespace qhlab {

enum class WeylMode {
    spatial_hx_hp,    // a(hx, hp)        - homogeneous wave front test
    spatial_x_hp,     // a(x, hp)         - semiclassical spatial test
    spacetime_full,   // a(t, x, h^th p_t, h p_x), arity 4, product pairs
    spacetime_t_x,    // a(t, x, h p_x), arity 3, slice-wise in t
    spacetime_t_hx    // a(t, hx, h p_x), arity 3, slice-wise in t
};

inline WeylMode weyl_mode_from_string(const std::string& s) {
    if (s == "spatial:(hx,hp)") return WeylMode::spatial_hx_hp;
    if (s == "spatial:(x,hp)") return WeylMode::spatial_x_hp;
    if (s == "spacetime:(t,x,h2pt,hpx)") return WeylMode::spacetime_full;
    if (s == "spacetime:(t,x,hpx)") return WeylMode::spacetime_t_x;
    if (s == "spacetime:(t,hx,hpx)") return WeylMode::spacetime_t_hx;
    throw schema_error("unknown weyl mode: " + s);
}

namespace weyl_detail {

// One-dimensional midpoint-quadrature Weyl application on a periodic grid
// x_j = x0 + j*step, period P = N*step, dual frequencies
// zeta_k = 2 pi k / P, k in [-N/2, N/2):
//   (Au)_j = sum_m F(j+m, (j-m) mod N) u_m,
//   F(c, d) = (1/N) sum_k e^{2 pi i k d / N} sym(x0 + c*step/2, zeta_k).
// Streams one midpoint diagonal at a time: O(N^2 log N) work, O(N) memory.
inline std::vector<cplx> apply_1d(
    const std::function<cplx(double, double)>& sym, double x0, double step,
    const std::vector<cplx>& u) {
    const std::size_t N = u.size();
    const double P = step * static_cast<double>(N);
    std::vector<cplx> out(N, cplx(0.0));
    std::vector<cplx> row(N);
    for (std::size_t c = 0; c <= 2 * (N - 1); ++c) {
        const double xm = x0 + static_cast<double>(c) * step / 2.0;
        bool nonzero = false;
        for (std::size_t kk = 0; kk < N; ++kk) {
            const long k = GridField1D::mode_of(kk, N);
            const double zeta = 2.0 * kPi * static_cast<double>(k) / P;
            row[kk] = sym(xm, zeta);
            nonzero = nonzero || (row[kk] != cplx(0.0));
        }
        if (!nonzero) continue;
        fft_inplace(row, +1);  // (1/N) sum_k e^{+2 pi i k d / N}
        const std::size_t j_lo = c >= N ? c - (N - 1) : 0;
        const std::size_t j_hi = std::min(c, N - 1);
        for (std::size_t j = j_lo; j <= j_hi; ++j) {
            const std::size_t m = c - j;
            const std::size_t d = (j + N - m % N) % N;  // (j - m) mod N
            out[j] += row[d] * u[m];
        }
    }
    return out;
}

// Fast path for separable symbols f(x) g(zeta): the convolution lags are
// the inverse FFT of g sampled on the dual grid, truncated where they fall
// below a relative floor (smooth g decays superpolynomially in the lag).
inline std::vector<cplx> apply_1d_separable(
    const std::function<cplx(double)>& fx,
    const std::function<cplx(double)>& gxi, double x0, double step,
    const std::vector<cplx>& u, double lag_floor = 1e-15) {
    const std::size_t N = u.size();
    const double P = step * static_cast<double>(N);
    std::vector<cplx> ghat(N);
    for (std::size_t kk = 0; kk < N; ++kk) {
        const long k = GridField1D::mode_of(kk, N);
        ghat[kk] = gxi(2.0 * kPi * static_cast<double>(k) / P);
    }
    fft_inplace(ghat, +1);
    double gmax = 0.0;
    for (const auto& v : ghat) gmax = std::max(gmax, std::abs(v));
    std::vector<std::size_t> lags;
    for (std::size_t d = 0; d < N; ++d)
        if (std::abs(ghat[d]) > lag_floor * gmax) lags.push_back(d);

    std::vector<cplx> out(N, cplx(0.0));
    for (std::size_t j = 0; j < N; ++j) {
        cplx acc(0.0);
        for (std::size_t d : lags) {
            const std::size_t m = (j + N - d) % N;
            // c = j + m reproduces the doubled-grid midpoint index,
            // including the half-period shift on wrapped lags
            const std::size_t c = j + m;
            const double xm = x0 + static_cast<double>(c) * step / 2.0;
            acc += fx(xm) * ghat[d] * u[m];
        }
        out[j] = acc;
    }
    return out;
}

} // namespace weyl_detail

// Margin policy: the symbol's x-support (mapped to grid coordinates) must
// sit inside [-0.75 L, 0.75 L].
inline void check_margin(const Interval& xsupp, double L,
                         const char* what = "symbol x-support") {
    if (!xsupp.finite()) return;
    if (xsupp.lo < -0.75 * L || xsupp.hi > 0.75 * L)
        throw margin_error(std::string(what) +
                           " leaves the 25% grid margin (box half-length " +
                           std::to_string(L) + ")");
}

inline void check_aliasing(const Interval& xisupp, double h_scale,
                           double zeta_max, std::vector<std::string>* warn) {
    if (!warn || !xisupp.finite()) return;
    const double bound = std::max(std::fabs(xisupp.lo), std::fabs(xisupp.hi));
    if (h_scale * zeta_max < bound)
        warn->push_back("aliasing: scaled grid bandwidth " +
                        std::to_string(h_scale * zeta_max) +
                        " below symbol frequency support bound " +
                        std::to_string(bound));
}

inline GridField1D weyl_apply(const PhaseSymbol& a, WeylMode mode,
                              const GridField1D& u, double h,
                              std::vector<std::string>* warnings = nullptr) {
    u.validate();
    if (a.arity != 2) throw schema_error("weyl_apply: spatial modes need arity 2");
    if (mode != WeylMode::spatial_hx_hp && mode != WeylMode::spatial_x_hp)
        throw schema_error("weyl_apply: GridField1D input needs a spatial mode");
    const double zeta_max = kPi * static_cast<double>(u.N) / (2.0 * u.L);
    const bool scale_x = (mode == WeylMode::spatial_hx_hp);

    // map the symbol's stated support back to grid coordinates
    Interval xs = a.support[0];
    if (scale_x && xs.finite()) {
        xs.lo /= h;
        xs.hi /= h;
    }
    check_margin(xs, u.L);
    check_aliasing(a.support[1], h, zeta_max, warnings);

    GridField1D out(u.L, u.N);
    if (a.separable_spatial()) {
        auto fx = [&](double x) {
            return a.factor_x(scale_x ? h * x : x);
        };
        auto gxi = [&](double zeta) { return a.factor_xi(h * zeta); };
        out.samples =
            weyl_detail::apply_1d_separable(fx, gxi, -u.L, u.dx(), u.samples);
    } else {
        auto sym = [&](double x, double zeta) {
            return a(scale_x ? h * x : x, h * zeta);
        };
        out.samples = weyl_detail::apply_1d(sym, -u.L, u.dx(), u.samples);
    }
    return out;
}

// Spacetime application.  theta is the power of h on the time frequency in
// the full mode (the quasi-homogeneous test uses theta = 2).
inline SpacetimeField weyl_apply(const PhaseSymbol& a, WeylMode mode,
                                 const SpacetimeField& u, double h,
                                 double theta = 2.0,
                                 std::vector<std::string>* warnings = nullptr) {
    u.validate();
    SpacetimeField out = u;
    const double zeta_max = kPi * static_cast<double>(u.N()) / (2.0 * u.L());

    if (mode == WeylMode::spacetime_t_x || mode == WeylMode::spacetime_t_hx) {
        if (a.arity != 3)
            throw schema_error("weyl_apply: slice-wise modes need arity 3");
        const bool scale_x = (mode == WeylMode::spacetime_t_hx);
        Interval xs = a.support[1];
        if (scale_x && xs.finite()) {
            xs.lo /= h;
            xs.hi /= h;
        }
        check_margin(xs, u.L());
        check_aliasing(a.support[2], h, zeta_max, warnings);
        for (std::size_t k = 0; k < u.N_t; ++k) {
            const double t = u.t(k);
            if (t < a.support[0].lo || t > a.support[0].hi) {
                std::fill(out.slices[k].samples.begin(),
                          out.slices[k].samples.end(), cplx(0.0));
                continue;
            }
            if (a.factor_t && a.spatial && a.spatial->separable_spatial()) {
                const cplx w = a.factor_t(t);
                auto fx = [&](double x) {
                    return w * a.spatial->factor_x(scale_x ? h * x : x);
                };
                auto gxi = [&](double zeta) {
                    return a.spatial->factor_xi(h * zeta);
                };
                out.slices[k].samples = weyl_detail::apply_1d_separable(
                    fx, gxi, -u.L(), u.slices[k].dx(), u.slices[k].samples);
            } else {
                auto sym = [&](double x, double zeta) {
                    return a(t, scale_x ? h * x : x, h * zeta);
                };
                out.slices[k].samples = weyl_detail::apply_1d(
                    sym, -u.L(), u.slices[k].dx(), u.slices[k].samples);
            }
        }
        return out;
    }

    if (mode != WeylMode::spacetime_full)
        throw schema_error("weyl_apply: SpacetimeField input needs a spacetime mode");
    if (a.arity != 4) throw schema_error("weyl_apply: full mode needs arity 4");
    if (!a.separable_pairs())
        throw schema_error(
            "weyl_apply: full spacetime mode requires a product symbol "
            "across the (t,tau) and (x,xi) pairs");
    if (!is_pow2(u.N_t))
        throw resolution_error(
            "weyl_apply: full spacetime mode needs a power-of-2 time grid");

    check_margin(a.support[1], u.L());
    check_margin(a.support[0], 0.5 * (u.t1 - u.t0) * 4.0 / 3.0,
                 "symbol t-support");
    check_aliasing(a.support[3], h, zeta_max, warnings);
    const double tau_max =
        kPi * static_cast<double>(u.N_t) / (u.t1 - u.t0 + u.dt());
    check_aliasing(a.support[2], std::pow(h, theta), tau_max, warnings);

    const double h_t = std::pow(h, theta);
    const PhaseSymbol& bt = *a.pair_ttau;
    const PhaseSymbol& bx = *a.pair_xxi;

    // spatial factor slice-by-slice
    for (std::size_t k = 0; k < u.N_t; ++k) {
        if (bx.separable_spatial()) {
            auto fx = [&](double x) { return bx.factor_x(x); };
            auto gxi = [&](double zeta) { return bx.factor_xi(h * zeta); };
            out.slices[k].samples = weyl_detail::apply_1d_separable(
                fx, gxi, -u.L(), u.slices[k].dx(), u.slices[k].samples);
        } else {
            auto sym = [&](double x, double zeta) { return bx(x, h * zeta); };
            out.slices[k].samples = weyl_detail::apply_1d(
                sym, -u.L(), u.slices[k].dx(), u.slices[k].samples);
        }
    }
    // time factor along each spatial column; the time grid is treated as
    // periodic with period N_t * dt.  Solutions do not decay in t, so the
    // columns are tapered to zero outside the 75% interior (where the margin
    // policy confines the symbol's t-support anyway): the circular midpoint
    // scheme couples the two window ends through short wrapped lags whose
    // midpoint lands at the window center, and untapered edge values leak
    // broadband energy into every tau bin.
    const std::size_t Nx = u.N();
    const double dt = u.dt();
    const double t_c = 0.5 * (u.t0 + u.t1);
    const double t_half = 0.5 * (u.t1 - u.t0);
    std::vector<double> taper(u.N_t);
    for (std::size_t k = 0; k < u.N_t; ++k) {
        const double lam = std::fabs(u.t(k) - t_c) / t_half;
        taper[k] =
            mollified_step(lam <= 0.75 ? 1.0 : 1.0 + 4.0 * (lam - 0.75));
    }
    std::vector<cplx> col(u.N_t);
    for (std::size_t j = 0; j < Nx; ++j) {
        for (std::size_t k = 0; k < u.N_t; ++k)
            col[k] = taper[k] * out.slices[k].samples[j];
        std::vector<cplx> res;
        if (bt.separable_spatial()) {
            auto ft = [&](double t) { return bt.factor_x(t); };
            auto gtau = [&](double tau) { return bt.factor_xi(h_t * tau); };
            res = weyl_detail::apply_1d_separable(ft, gtau, u.t0, dt, col);
        } else {
            auto sym = [&](double t, double tau) { return bt(t, h_t * tau); };
            res = weyl_detail::apply_1d(sym, u.t0, dt, col);
        }
        for (std::size_t k = 0; k < u.N_t; ++k)
            out.slices[k].samples[j] = res[k];
    }
    return out;
}

} // namespace qhlab
