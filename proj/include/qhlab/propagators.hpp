#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "qhlab/coefficients.hpp"
#include "qhlab/cutoffs.hpp"
#include "qhlab/errors.hpp"
#include "qhlab/fft.hpp"
#include "qhlab/grid.hpp"

namespace qhlab {

// Fraction of the L2 mass carried by modes below 80% of the Nyquist
// frequency; the propagators refuse under-resolved data.
inline double bandlimit_fraction(const GridField1D& u) {
    auto spec = fft(u.samples);
    double total = 0.0, low = 0.0;
    const long cut = static_cast<long>(0.8 * 0.5 * static_cast<double>(u.N));
    for (std::size_t m = 0; m < u.N; ++m) {
        const double p = std::norm(spec[m]);
        total += p;
        if (std::labs(GridField1D::mode_of(m, u.N)) <= cut) low += p;
    }
    return total > 0.0 ? low / total : 1.0;
}

inline void require_bandlimited(const GridField1D& u) {
    const double f = bandlimit_fraction(u);
    if (f < 1.0 - 1e-10)
        throw resolution_error(
            "initial data not band-limited: mass fraction below 80% Nyquist "
            "is " +
            std::to_string(f));
}

// Exact free propagator e^{-itK}, K = -Laplacian/2, as the Fourier
// multiplier e^{-it xi^2/2} on the periodic grid.
inline GridField1D free_propagate(const GridField1D& phi, double t,
                                  bool check_band = true) {
    phi.validate();
    if (check_band) require_bandlimited(phi);
    auto spec = fft(phi.samples);
    for (std::size_t m = 0; m < phi.N; ++m) {
        const double xi =
            phi.xi_of_mode(GridField1D::mode_of(m, phi.N));
        spec[m] *= std::exp(cplx(0.0, -t * xi * xi / 2.0));
    }
    GridField1D out(phi.L, phi.N);
    out.samples = ifft(std::move(spec));
    return out;
}

namespace prop_detail {

// spectral derivative d/dx on the periodic grid
inline std::vector<cplx> spectral_dx(const std::vector<cplx>& u, double L) {
    auto spec = fft(u);
    const std::size_t N = spec.size();
    for (std::size_t m = 0; m < N; ++m) {
        const long k = GridField1D::mode_of(m, N);
        spec[m] *= cplx(0.0, kPi * static_cast<double>(k) / L);
    }
    return ifft(std::move(spec));
}

// H u = (1/2) D* (a D u) + V u at time t (d = 1, Hermitian by construction)
inline std::vector<cplx> apply_H(const CoefficientField& f, double t,
                                 const GridField1D& grid,
                                 const std::vector<cplx>& u) {
    auto du = spectral_dx(u, grid.L);
    for (std::size_t j = 0; j < grid.N; ++j)
        du[j] *= f.a1(t, grid.x(j));
    auto out = spectral_dx(du, grid.L);
    for (std::size_t j = 0; j < grid.N; ++j) {
        out[j] = -0.5 * out[j];  // D* = -d/dx
        out[j] += f.v1(t, grid.x(j)) * u[j];
    }
    return out;
}

// (I + i alpha K)^{-1} with K = -Laplacian/2, the preconditioner for the
// fixed-point Crank-Nicolson solve
inline std::vector<cplx> apply_inv_free(double alpha,
                                        const GridField1D& grid,
                                        const std::vector<cplx>& u) {
    auto spec = fft(u);
    for (std::size_t m = 0; m < grid.N; ++m) {
        const double xi =
            grid.xi_of_mode(GridField1D::mode_of(m, grid.N));
        spec[m] /= cplx(1.0, alpha * xi * xi / 2.0);
    }
    return ifft(std::move(spec));
}

} // namespace prop_detail

// Crank-Nicolson step for i du/dt = H(t) u with H frozen at the interval
// midpoint; the implicit solve is a Fourier-preconditioned fixed point,
//   u^{(k+1)} = (I + i a K)^{-1} (rhs - i a (H - K) u^{(k)}),  a = dt/2,
// which contracts because H - K is a bounded perturbation for the
// admissible fields.
inline void cn_step(const CoefficientField& f, const GridField1D& grid,
                    std::vector<cplx>& u, double t, double dt,
                    int max_iter = 60, double fp_tol = 1e-14) {
    using namespace prop_detail;
    const double a = dt / 2.0;
    const double tm = t + dt / 2.0;

    auto Hu = apply_H(f, tm, grid, u);
    std::vector<cplx> rhs(u.size());
    for (std::size_t j = 0; j < u.size(); ++j)
        rhs[j] = u[j] - cplx(0.0, a) * Hu[j];

    // residual form of H - K: (1/2) D*((a-1) D u) + V u
    auto pert = [&](const std::vector<cplx>& v) {
        auto dv = spectral_dx(v, grid.L);
        for (std::size_t j = 0; j < grid.N; ++j)
            dv[j] *= (f.a1(tm, grid.x(j)) - 1.0);
        auto out = spectral_dx(dv, grid.L);
        for (std::size_t j = 0; j < grid.N; ++j)
            out[j] = -0.5 * out[j] + f.v1(tm, grid.x(j)) * v[j];
        return out;
    };

    std::vector<cplx> w = apply_inv_free(a, grid, rhs);  // initial guess
    double rhs_norm = 0.0;
    for (const auto& v : rhs) rhs_norm += std::norm(v);
    rhs_norm = std::sqrt(rhs_norm);
    for (int it = 0; it < max_iter; ++it) {
        auto pw = pert(w);
        std::vector<cplx> in(u.size());
        for (std::size_t j = 0; j < u.size(); ++j)
            in[j] = rhs[j] - cplx(0.0, a) * pw[j];
        auto w_next = apply_inv_free(a, grid, in);
        double diff = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j)
            diff += std::norm(w_next[j] - w[j]);
        w.swap(w_next);
        if (std::sqrt(diff) <= fp_tol * std::max(1.0, rhs_norm)) {
            u.swap(w);
            return;
        }
    }
    throw numerical_error(
        "cn_step: fixed-point solve failed to converge at t = " +
        std::to_string(t));
}

inline GridField1D perturbed_propagate(const CoefficientField& field,
                                       const GridField1D& phi, double t0,
                                       double t1, double dt,
                                       bool check_band = true) {
    phi.validate();
    if (field.dimension != 1)
        throw schema_error("perturbed_propagate: d = 1 only");
    if (check_band) require_bandlimited(phi);
    if (!(dt > 0.0)) throw schema_error("perturbed_propagate: dt must be > 0");

    GridField1D out = phi;
    const double span = t1 - t0;
    const long n_steps = std::lround(std::ceil(std::fabs(span) / dt - 1e-12));
    if (n_steps == 0) return out;
    const double step = span / static_cast<double>(n_steps);
    double t = t0;
    for (long k = 0; k < n_steps; ++k) {
        cn_step(field, out, out.samples, t, step);
        t = t0 + span * static_cast<double>(k + 1) / static_cast<double>(n_steps);
    }
    return out;
}

enum class PropagatorKind { free, perturbed };

// Samples the solution on a uniform time grid, stepping sequentially and
// checkpointing at the grid times.
inline SpacetimeField assemble_spacetime(PropagatorKind kind,
                                         const CoefficientField* field,
                                         const GridField1D& phi, double t0,
                                         double t1, std::size_t N_t,
                                         double dt = 1e-3,
                                         const std::string& field_id = "") {
    phi.validate();
    if (N_t < 16) throw schema_error("assemble_spacetime: N_t must be >= 16");
    if (kind == PropagatorKind::perturbed && field == nullptr)
        throw schema_error("assemble_spacetime: perturbed kind needs a field");
    require_bandlimited(phi);

    SpacetimeField u;
    u.t0 = t0;
    u.t1 = t1;
    u.N_t = N_t;
    u.slices.reserve(N_t);
    if (kind == PropagatorKind::free) {
        u.provenance.kind = "free";
        for (std::size_t k = 0; k < N_t; ++k) {
            const double t =
                t0 + (t1 - t0) * static_cast<double>(k) /
                         static_cast<double>(N_t - 1);
            u.slices.push_back(free_propagate(phi, t, false));
        }
    } else {
        u.provenance.kind = "perturbed";
        u.provenance.field_id = field_id.empty() ? field->tag : field_id;
        u.provenance.dt = dt;
        // march from t = 0 toward each end of the window
        std::vector<double> times(N_t);
        for (std::size_t k = 0; k < N_t; ++k)
            times[k] = t0 + (t1 - t0) * static_cast<double>(k) /
                                static_cast<double>(N_t - 1);
        u.slices.assign(N_t, phi);
        try {
            // nonnegative times in increasing order
            GridField1D cur = phi;
            double t_cur = 0.0;
            for (std::size_t k = 0; k < N_t; ++k) {
                if (times[k] < 0.0) continue;
                cur = perturbed_propagate(*field, cur, t_cur, times[k], dt,
                                          false);
                t_cur = times[k];
                u.slices[k] = cur;
            }
            // negative times in decreasing order
            cur = phi;
            t_cur = 0.0;
            for (std::size_t k = N_t; k-- > 0;) {
                if (times[k] >= 0.0) continue;
                cur = perturbed_propagate(*field, cur, t_cur, times[k], dt,
                                          false);
                t_cur = times[k];
                u.slices[k] = cur;
            }
        } catch (const numerical_error& e) {
            throw numerical_error(std::string(e.what()) +
                                  " (during spacetime assembly)");
        }
    }
    u.validate();
    return u;
}

// -------- bundled initial data --------

inline GridField1D make_gaussian(double L, std::size_t N, double x0,
                                 double width, double xi0 = 0.0) {
    GridField1D phi(L, N);
    for (std::size_t j = 0; j < N; ++j) {
        const double x = phi.x(j);
        phi.samples[j] = std::exp(cplx(-(x - x0) * (x - x0) /
                                           (2.0 * width * width),
                                       xi0 * x));
    }
    const double n = phi.norm();
    for (auto& v : phi.samples) v /= n;
    return phi;
}

// Grid surrogate for a point mass at x0: flat spectrum up to xi_cut with a
// smooth roll-off ending at 2 xi_cut.  The flat core is what the scale
// sweeps probe; detectors stay unbiased as long as eta/h <= xi_cut.
// Default xi_cut is a quarter of the grid Nyquist frequency.
inline GridField1D make_delta_surrogate(double L, std::size_t N, double x0,
                                        double xi_cut = 0.0) {
    GridField1D phi(L, N);
    if (xi_cut <= 0.0) xi_cut = 0.25 * kPi / phi.dx();
    std::vector<cplx> spec(N, cplx(0.0));
    for (std::size_t m = 0; m < N; ++m) {
        const double zeta =
            phi.xi_of_mode(GridField1D::mode_of(m, N));
        const double w = mollified_step(std::fabs(zeta) / xi_cut);
        if (w != 0.0)
            spec[m] = w * std::exp(cplx(0.0, -zeta * (x0 + L)));
    }
    phi.samples = ifft(std::move(spec));
    const double n = phi.norm();
    for (auto& v : phi.samples) v /= n;
    return phi;
}

// chirp e^{i beta x^2 / 2} under a wide smooth window, flat on the central
// half of the box
inline GridField1D make_windowed_chirp(double L, std::size_t N, double beta) {
    GridField1D phi(L, N);
    for (std::size_t j = 0; j < N; ++j) {
        const double x = phi.x(j);
        const double win = mollified_step(std::fabs(x) / (0.5 * L) );
        phi.samples[j] = win * std::exp(cplx(0.0, beta * x * x / 2.0));
    }
    const double n = phi.norm();
    for (auto& v : phi.samples) v /= n;
    return phi;
}

} // namespace qhlab
