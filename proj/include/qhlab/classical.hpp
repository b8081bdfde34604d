#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "qhlab/coefficients.hpp"
#include "qhlab/ode.hpp"

namespace qhlab {

struct PhasePoint {
    std::vector<double> y;    // position
    std::vector<double> eta;  // momentum
};

struct ExtendedPhasePoint {
    double t = 0.0;
    std::vector<double> x;
    double tau = 0.0;
    std::vector<double> xi;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> x;   // per sample, size d
    std::vector<std::vector<double>> xi;  // per sample, size d
    std::vector<double> steps;            // accepted step sizes
    double tol = 0.0;

    void write_csv(std::ostream& os) const {
        os << "t";
        const std::size_t d = x.empty() ? 1 : x.front().size();
        for (std::size_t i = 0; i < d; ++i) os << ",x" << i;
        for (std::size_t i = 0; i < d; ++i) os << ",xi" << i;
        os << ",step\n";
        char buf[64];
        for (std::size_t k = 0; k < times.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", times[k]);
            os << buf;
            for (double v : x[k]) {
                std::snprintf(buf, sizeof buf, ",%.17g", v);
                os << buf;
            }
            for (double v : xi[k]) {
                std::snprintf(buf, sizeof buf, ",%.17g", v);
                os << buf;
            }
            std::snprintf(buf, sizeof buf, ",%.17g\n", steps[k]);
            os << buf;
        }
    }
};

namespace detail {

inline void metric_apply(const CoefficientField& f, double t,
                         const std::vector<double>& x,
                         const std::vector<double>& xi,
                         std::vector<double>& out) {
    const int d = f.dimension;
    if (d == 1) {
        out.assign(1, f.a1(t, x[0]) * xi[0]);
        return;
    }
    out.assign(static_cast<std::size_t>(d), 0.0);
    std::vector<int> al(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            out[static_cast<std::size_t>(i)] +=
                f.metric_deriv(i, j, 0, al, t, x) *
                xi[static_cast<std::size_t>(j)];
}

inline double metric_quad(const CoefficientField& f, double t,
                          const std::vector<double>& x,
                          const std::vector<double>& xi) {
    const int d = f.dimension;
    if (d == 1) return f.a1(t, x[0]) * xi[0] * xi[0];
    std::vector<double> ax;
    metric_apply(f, t, x, xi, ax);
    double q = 0.0;
    for (int i = 0; i < d; ++i)
        q += ax[static_cast<std::size_t>(i)] * xi[static_cast<std::size_t>(i)];
    return q;
}

// gradient (in x_i) of a_jk(t,x) xi_j xi_k
inline void metric_quad_grad(const CoefficientField& f, double t,
                             const std::vector<double>& x,
                             const std::vector<double>& xi,
                             std::vector<double>& out) {
    const int d = f.dimension;
    if (d == 1) {
        out.assign(1, f.a1_dx(t, x[0]) * xi[0] * xi[0]);
        return;
    }
    out.assign(static_cast<std::size_t>(d), 0.0);
    std::vector<int> al(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < d; ++i) {
        al.assign(static_cast<std::size_t>(d), 0);
        al[static_cast<std::size_t>(i)] = 1;
        double g = 0.0;
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                g += f.metric_deriv(j, k, 0, al, t, x) *
                     xi[static_cast<std::size_t>(j)] *
                     xi[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(i)] = g;
    }
}

inline void potential_grad(const CoefficientField& f, double t,
                           const std::vector<double>& x,
                           std::vector<double>& out) {
    const int d = f.dimension;
    if (!f.has_potential) {
        out.assign(static_cast<std::size_t>(d), 0.0);
        return;
    }
    if (d == 1) {
        out.assign(1, f.v1_dx(t, x[0]));
        return;
    }
    out.assign(static_cast<std::size_t>(d), 0.0);
    std::vector<int> al(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < d; ++i) {
        al.assign(static_cast<std::size_t>(d), 0);
        al[static_cast<std::size_t>(i)] = 1;
        out[static_cast<std::size_t>(i)] = f.potential_deriv(0, al, t, x);
    }
}

} // namespace detail

// Frozen-time kinetic energy (1/2) a_ij(s,x) xi_i xi_j.
inline double frozen_energy(const CoefficientField& field, double s,
                            const std::vector<double>& x,
                            const std::vector<double>& xi) {
    return 0.5 * detail::metric_quad(field, s, x, xi);
}

// Integrates xdot_i = a_ij(s,x) xi_j, xidot_i = -(1/2) (d_i a_jk)(s,x)
// xi_j xi_k from t = s to t_end at the frozen time s.
inline Trajectory hamilton_flow(const CoefficientField& field, double s,
                                const std::vector<double>& y,
                                const std::vector<double>& eta, double t_end,
                                double tol, bool record = true) {
    const int d = field.dimension;
    auto rhs = [&](double, const StateVec& st, StateVec& out) {
        std::vector<double> x(st.begin(), st.begin() + d);
        std::vector<double> xi(st.begin() + d, st.end());
        std::vector<double> v, g;
        detail::metric_apply(field, s, x, xi, v);
        detail::metric_quad_grad(field, s, x, xi, g);
        out.resize(2 * static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            out[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)];
            out[static_cast<std::size_t>(d + i)] =
                -0.5 * g[static_cast<std::size_t>(i)];
        }
    };
    StateVec st(y.begin(), y.end());
    st.insert(st.end(), eta.begin(), eta.end());
    OdeOptions opt;
    opt.abs_tol = opt.rel_tol = tol;
    auto res = integrate_ode(rhs, std::move(st), s, t_end, opt, record);

    Trajectory tr;
    tr.tol = tol;
    auto push = [&](double t, const StateVec& v, double h) {
        tr.times.push_back(t);
        tr.x.emplace_back(v.begin(), v.begin() + d);
        tr.xi.emplace_back(v.begin() + d, v.end());
        tr.steps.push_back(h);
    };
    if (record)
        for (const auto& smp : res.samples) push(smp.t, smp.state, smp.step);
    else
        push(t_end, res.state, 0.0);
    return tr;
}

enum class TrappingVerdict { forward, backward, both, undetermined };

inline std::string to_string(TrappingVerdict v) {
    switch (v) {
        case TrappingVerdict::forward: return "forward";
        case TrappingVerdict::backward: return "backward";
        case TrappingVerdict::both: return "both";
        default: return "undetermined";
    }
}

// Escape test: |x| beyond escape_radius with outward radial velocity
// a_ij x_i xi_j of the matching sign before |t - s| reaches t_max.
inline TrappingVerdict classify_nontrapping(const CoefficientField& field,
                                            double s,
                                            const std::vector<double>& y,
                                            const std::vector<double>& eta,
                                            double escape_radius,
                                            double t_max, double tol = 1e-9) {
    const int d = field.dimension;
    auto escapes = [&](int dir) {
        // dir = +1 forward in t, -1 backward
        double t = s;
        StateVec st(y.begin(), y.end());
        st.insert(st.end(), eta.begin(), eta.end());
        const double chunk = std::max(1.0, escape_radius / 8.0);
        while (std::fabs(t - s) < t_max) {
            double t_next = t + dir * chunk;
            auto rhs = [&](double, const StateVec& v, StateVec& out) {
                std::vector<double> x(v.begin(), v.begin() + d);
                std::vector<double> xi(v.begin() + d, v.end());
                std::vector<double> av, g;
                detail::metric_apply(field, s, x, xi, av);
                detail::metric_quad_grad(field, s, x, xi, g);
                out.resize(2 * static_cast<std::size_t>(d));
                for (int i = 0; i < d; ++i) {
                    out[static_cast<std::size_t>(i)] =
                        av[static_cast<std::size_t>(i)];
                    out[static_cast<std::size_t>(d + i)] =
                        -0.5 * g[static_cast<std::size_t>(i)];
                }
            };
            OdeOptions opt;
            opt.abs_tol = opt.rel_tol = tol;
            st = integrate_ode(rhs, std::move(st), t, t_next, opt).state;
            t = t_next;

            std::vector<double> x(st.begin(), st.begin() + d);
            std::vector<double> xi(st.begin() + d, st.end());
            double r2 = 0.0;
            for (double v : x) r2 += v * v;
            if (std::sqrt(r2) > escape_radius) {
                std::vector<double> ax;
                detail::metric_apply(field, s, x, xi, ax);
                double radial = 0.0;
                for (int i = 0; i < d; ++i)
                    radial += x[static_cast<std::size_t>(i)] *
                              ax[static_cast<std::size_t>(i)];
                if (dir * radial > 0.0) return true;
            }
        }
        return false;
    };
    const bool fwd = escapes(+1);
    const bool bwd = escapes(-1);
    if (fwd && bwd) return TrappingVerdict::both;
    if (fwd) return TrappingVerdict::forward;
    if (bwd) return TrappingVerdict::backward;
    return TrappingVerdict::undetermined;
}

struct ScatteringData {
    int direction = +1;  // +1 or -1
    std::vector<double> x_asym;
    std::vector<double> xi_asym;
    double horizon = 0.0;          // last horizon used
    double residual = 0.0;         // change under the final doubling
    bool nontrapped = true;
};

// Horizon-doubling estimate of x_pm = lim x(t) - (t-s) xi(t) and
// xi_pm = lim xi(t).
inline ScatteringData scattering_data(const CoefficientField& field, double s,
                                      const std::vector<double>& y,
                                      const std::vector<double>& eta,
                                      int direction, double tol,
                                      double horizon_cap = 1e6) {
    const int d = field.dimension;
    ScatteringData sd;
    sd.direction = direction;

    auto estimate = [&](double T) {
        Trajectory tr = hamilton_flow(field, s, y, eta,
                                      s + direction * T, tol * 1e-2, false);
        std::vector<double> a(static_cast<std::size_t>(d));
        const auto& x = tr.x.back();
        const auto& xi = tr.xi.back();
        const double t = tr.times.back();
        for (int i = 0; i < d; ++i)
            a[static_cast<std::size_t>(i)] =
                x[static_cast<std::size_t>(i)] -
                (t - s) * xi[static_cast<std::size_t>(i)];
        return std::make_pair(a, xi);
    };

    double T = 32.0;
    auto prev = estimate(T);
    while (true) {
        auto cur = estimate(2.0 * T);
        double res = 0.0;
        for (int i = 0; i < d; ++i) {
            res = std::max(res, std::fabs(cur.first[static_cast<std::size_t>(
                                              i)] -
                                          prev.first[static_cast<std::size_t>(
                                              i)]));
            res = std::max(res, std::fabs(cur.second[static_cast<std::size_t>(
                                              i)] -
                                          prev.second[static_cast<std::size_t>(
                                              i)]));
        }
        sd.horizon = 2.0 * T;
        sd.residual = res;
        sd.x_asym = cur.first;
        sd.xi_asym = cur.second;
        if (res <= tol) return sd;
        T *= 2.0;
        if (T > horizon_cap)
            throw numerical_error(
                "scattering_data: horizon doubling stalled above tol");
        prev = cur;
    }
}

// l0(kappa, t, x, tau, xi) =
//   -(1/2) t {a((1-k)t, x - k t xi) - delta} xi xi - t V((1-k)t, x - k t xi)
inline double eval_l0(const CoefficientField& field, double kappa,
                      const ExtendedPhasePoint& p) {
    const int d = field.dimension;
    const double u = (1.0 - kappa) * p.t;
    std::vector<double> X(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
        X[static_cast<std::size_t>(i)] =
            p.x[static_cast<std::size_t>(i)] -
            kappa * p.t * p.xi[static_cast<std::size_t>(i)];
    double quad = detail::metric_quad(field, u, X, p.xi);
    double xi2 = 0.0;
    for (double v : p.xi) xi2 += v * v;
    std::vector<int> al(static_cast<std::size_t>(d), 0);
    const double V = field.has_potential
                         ? field.potential_deriv(0, al, u, X)
                         : 0.0;
    return -0.5 * p.t * (quad - xi2) - p.t * V;
}

// Rescaled deformation flow Phi_h between parameter values kappa_from and
// kappa_to.  The t component is held fixed structurally.
inline ExtendedPhasePoint technical_flow_between(const CoefficientField& field,
                                                 double h, double kappa_from,
                                                 double kappa_to,
                                                 const ExtendedPhasePoint& p0,
                                                 double tol) {
    const int d = field.dimension;
    const double t = p0.t;
    auto rhs = [&](double kappa, const StateVec& st, StateVec& out) {
        std::vector<double> x(st.begin(), st.begin() + d);
        std::vector<double> xi(st.begin() + d + 1, st.end());
        const double u = (1.0 - kappa) * t;
        std::vector<double> X(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i)
            X[static_cast<std::size_t>(i)] =
                x[static_cast<std::size_t>(i)] -
                kappa * t * xi[static_cast<std::size_t>(i)] / h;

        std::vector<double> axi, gq, gV;
        detail::metric_apply(field, u, X, xi, axi);
        detail::metric_quad_grad(field, u, X, xi, gq);
        detail::potential_grad(field, u, X, gV);
        const double quad = detail::metric_quad(field, u, X, xi);
        double xi2 = 0.0;
        for (double v : xi) xi2 += v * v;

        std::vector<int> al(static_cast<std::size_t>(d), 0);
        const double V =
            field.has_potential ? field.potential_deriv(0, al, u, X) : 0.0;
        double dta_quad = 0.0;  // (d_t a_ij) xi_i xi_j
        if (d == 1)
            dta_quad = field.a1_dt(u, X[0]) * xi[0] * xi[0];
        else
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    std::vector<int> a0(static_cast<std::size_t>(d), 0);
                    dta_quad += field.metric_deriv(i, j, 1, a0, u, X) *
                                xi[static_cast<std::size_t>(i)] *
                                xi[static_cast<std::size_t>(j)];
                }
        const double dtV = field.v1_dt(u, d == 1 ? X[0] : 0.0);

        out.resize(2 * static_cast<std::size_t>(d) + 1);
        double xi_gq = 0.0, xi_gV = 0.0;
        for (int i = 0; i < d; ++i) {
            xi_gq += xi[static_cast<std::size_t>(i)] *
                     gq[static_cast<std::size_t>(i)];
            xi_gV += xi[static_cast<std::size_t>(i)] *
                     gV[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < d; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            out[ii] = -(t / h) * (axi[ii] - xi[ii]) +
                      0.5 * kappa * t * t / (h * h) * gq[ii] +
                      kappa * t * t * gV[ii];
            out[d + 1 + ii] = 0.5 * (t / h) * gq[ii] + h * t * gV[ii];
        }
        out[static_cast<std::size_t>(d)] =
            0.5 * (quad - xi2) + 0.5 * (1.0 - kappa) * t * dta_quad -
            0.5 * (kappa * t / h) * xi_gq + h * h * V +
            h * h * (1.0 - kappa) * t * dtV - h * kappa * t * xi_gV;
    };

    StateVec st(p0.x.begin(), p0.x.end());
    st.push_back(p0.tau);
    st.insert(st.end(), p0.xi.begin(), p0.xi.end());
    OdeOptions opt;
    opt.abs_tol = opt.rel_tol = tol;
    StateVec out = integrate_ode(rhs, std::move(st), kappa_from, kappa_to, opt)
                       .state;
    ExtendedPhasePoint p;
    p.t = t;
    p.x.assign(out.begin(), out.begin() + d);
    p.tau = out[static_cast<std::size_t>(d)];
    p.xi.assign(out.begin() + d + 1, out.end());
    return p;
}

inline ExtendedPhasePoint technical_flow(const CoefficientField& field,
                                         double h, double kappa,
                                         const ExtendedPhasePoint& start,
                                         double tol) {
    return technical_flow_between(field, h, 0.0, kappa, start, tol);
}

inline ExtendedPhasePoint technical_flow_inverse(const CoefficientField& field,
                                                 double h, double kappa,
                                                 const ExtendedPhasePoint& p,
                                                 double tol) {
    return technical_flow_between(field, h, kappa, 0.0, p, tol);
}

struct ReducedState {
    std::vector<double> z;
    double rho = 0.0;
    std::vector<double> zeta;
};

struct ReducedTrajectory {
    std::vector<double> mu;
    std::vector<std::vector<double>> z;
    std::vector<std::vector<double>> zeta;
    double rho = 0.0;
};

// Reduced flow in the variable mu = (1-kappa) s:
//   dz = h^{-1} a(mu,z) zeta,  dzeta = -(1/2) h^{-1} grad a zeta zeta
//                                      - h grad V(mu,z),
// with rho constant by construction.
inline ReducedTrajectory reduced_flow(const CoefficientField& field, double h,
                                      double s, const std::vector<double>& y,
                                      double sigma,
                                      const std::vector<double>& eta,
                                      double mu_end, double tol,
                                      bool record = false) {
    const int d = field.dimension;
    auto rhs = [&](double mu, const StateVec& st, StateVec& out) {
        std::vector<double> z(st.begin(), st.begin() + d);
        std::vector<double> zeta(st.begin() + d, st.end());
        std::vector<double> az, gq, gV;
        detail::metric_apply(field, mu, z, zeta, az);
        detail::metric_quad_grad(field, mu, z, zeta, gq);
        detail::potential_grad(field, mu, z, gV);
        out.resize(2 * static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            out[ii] = az[ii] / h;
            out[static_cast<std::size_t>(d) + ii] =
                -0.5 * gq[ii] / h - h * gV[ii];
        }
    };
    StateVec st(y.begin(), y.end());
    st.insert(st.end(), eta.begin(), eta.end());
    OdeOptions opt;
    opt.abs_tol = opt.rel_tol = tol;
    auto res = integrate_ode(rhs, std::move(st), s, mu_end, opt, record);

    ReducedTrajectory tr;
    std::vector<int> al(static_cast<std::size_t>(d), 0);
    const double Vs =
        field.has_potential ? field.potential_deriv(0, al, s, y) : 0.0;
    tr.rho = sigma + 0.5 * detail::metric_quad(field, s, y, eta) + h * h * Vs;
    auto push = [&](double mu, const StateVec& v) {
        tr.mu.push_back(mu);
        tr.z.emplace_back(v.begin(), v.begin() + d);
        tr.zeta.emplace_back(v.begin() + d, v.end());
    };
    if (record)
        for (const auto& smp : res.samples) push(smp.t, smp.state);
    else
        push(mu_end, res.state);
    return tr;
}

// Reconstructs the technical-flow image at kappa from the reduced state at
// mu = (1-kappa) s.
inline ExtendedPhasePoint reduced_to_technical(const CoefficientField& field,
                                               double h, double s, double mu,
                                               const std::vector<double>& z,
                                               double rho,
                                               const std::vector<double>& zeta) {
    const int d = field.dimension;
    ExtendedPhasePoint p;
    p.t = s;
    p.x.resize(static_cast<std::size_t>(d));
    p.xi = zeta;
    for (int i = 0; i < d; ++i)
        p.x[static_cast<std::size_t>(i)] =
            z[static_cast<std::size_t>(i)] +
            (s - mu) / h * zeta[static_cast<std::size_t>(i)];
    std::vector<int> al(static_cast<std::size_t>(d), 0);
    const double V =
        field.has_potential ? field.potential_deriv(0, al, mu, z) : 0.0;
    double zeta2 = 0.0;
    for (double v : zeta) zeta2 += v * v;
    p.tau = rho -
            (mu / s) * (0.5 * detail::metric_quad(field, mu, z, zeta) +
                        h * h * V) -
            (s - mu) / s * 0.5 * zeta2;
    return p;
}

struct HighEnergyRow {
    double h;
    ExtendedPhasePoint image;  // Phi_h(1, start)
};

struct HighEnergyReport {
    std::vector<HighEnergyRow> table;
    ExtendedPhasePoint extrapolated;
    ExtendedPhasePoint predicted;  // from scattering data
    double discrepancy = 0.0;      // max over components
};

// Compares the extrapolated endpoint Phi_h(1) as h -> 0 with the
// prediction (s, x_pm, sigma + E0 - xi_pm^2/2, xi_pm) assembled from
// scattering data.
inline HighEnergyReport highenergy_limit(const CoefficientField& field,
                                         const ExtendedPhasePoint& start,
                                         const std::vector<double>& h_seq,
                                         double tol) {
    const int d = field.dimension;
    const int direction = start.t < 0 ? +1 : -1;
    HighEnergyReport rep;
    for (double h : h_seq)
        rep.table.push_back({h, technical_flow(field, h, 1.0, start, tol)});

    // componentwise Richardson extrapolation to h = 0: Neville's scheme on
    // (h_k, v_k) removes one power of h per stage
    const std::size_t m = rep.table.size();
    auto extrapolate = [&](auto getter) {
        std::vector<double> p(m);
        for (std::size_t k = 0; k < m; ++k) p[k] = getter(rep.table[k].image);
        for (std::size_t stage = 1; stage < m; ++stage)
            for (std::size_t k = 0; k + stage < m; ++k) {
                const double h0 = rep.table[k].h;
                const double h1 = rep.table[k + stage].h;
                p[k] = (h0 * p[k + 1] - h1 * p[k]) / (h0 - h1);
            }
        return p[0];
    };
    rep.extrapolated.t = start.t;
    rep.extrapolated.x.resize(static_cast<std::size_t>(d));
    rep.extrapolated.xi.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        rep.extrapolated.x[static_cast<std::size_t>(i)] = extrapolate(
            [i](const ExtendedPhasePoint& p) {
                return p.x[static_cast<std::size_t>(i)];
            });
        rep.extrapolated.xi[static_cast<std::size_t>(i)] = extrapolate(
            [i](const ExtendedPhasePoint& p) {
                return p.xi[static_cast<std::size_t>(i)];
            });
    }
    rep.extrapolated.tau =
        extrapolate([](const ExtendedPhasePoint& p) { return p.tau; });

    ScatteringData sd = scattering_data(field, start.t, start.x, start.xi,
                                        direction, tol);
    rep.predicted.t = start.t;
    rep.predicted.x = sd.x_asym;
    rep.predicted.xi = sd.xi_asym;
    double xi_pm2 = 0.0;
    for (double v : sd.xi_asym) xi_pm2 += v * v;
    rep.predicted.tau = start.tau +
                        0.5 * detail::metric_quad(field, start.t, start.x,
                                                  start.xi) -
                        0.5 * xi_pm2;

    double disc = std::fabs(rep.extrapolated.tau - rep.predicted.tau);
    for (int i = 0; i < d; ++i) {
        disc = std::max(disc,
                        std::fabs(rep.extrapolated.x[static_cast<std::size_t>(
                                      i)] -
                                  rep.predicted.x[static_cast<std::size_t>(
                                      i)]));
        disc = std::max(disc,
                        std::fabs(rep.extrapolated.xi[static_cast<std::size_t>(
                                      i)] -
                                  rep.predicted.xi[static_cast<std::size_t>(
                                      i)]));
    }
    rep.discrepancy = disc;
    return rep;
}

struct MourreReport {
    double c1 = 0.0;   // min kinetic form along the orbit
    double C2 = 0.0;   // max kinetic form along the orbit
    double C = 0.0;    // radial deviation bound
    double C7 = 0.0;   // energy-bracket constant
    double max_energy_drift = 0.0;
};

// Fits the constants of the radial bound and the energy bracket along the
// reduced orbit for one value of h (forward case: s < 0, mu in [s, 0]).
inline MourreReport mourre_diagnostics(const CoefficientField& field, double h,
                                       double s, const std::vector<double>& y,
                                       const std::vector<double>& eta,
                                       double tol = 1e-10) {
    MourreReport rep;
    ReducedTrajectory tr =
        reduced_flow(field, h, s, y, 0.0, eta, 0.0, tol, true);
    const double E0 = detail::metric_quad(field, s, y, eta);
    const double eps = field.decay_exponent;
    rep.c1 = 1e300;
    for (std::size_t k = 0; k < tr.mu.size(); ++k) {
        const double mu = tr.mu[k];
        const double E = detail::metric_quad(field, mu, tr.z[k], tr.zeta[k]);
        rep.c1 = std::min(rep.c1, E);
        rep.C2 = std::max(rep.C2, E);
        double r2 = 0.0;
        for (double v : tr.z[k]) r2 += v * v;
        const double dev =
            std::fabs(std::sqrt(r2) - (mu - s) / h * std::sqrt(E0));
        rep.C = std::max(rep.C, dev);
        const double drift = std::fabs(E - E0);
        rep.max_energy_drift = std::max(rep.max_energy_drift, drift);
        const double denom = h * E0 + std::pow(h, 1.0 + eps);
        rep.C7 = std::max(rep.C7, drift / denom);
    }
    return rep;
}

// Residual of the leading transport identity for b0 = b o Phi_h(kappa)^{-1},
// with the b0 derivatives taken by centered finite differences.  The symbol
// b is an arity-4 callable b(t, x, tau, xi); d = 1 only.
inline double transport_residual(
    const CoefficientField& field,
    const std::function<double(double, double, double, double)>& b, double h,
    double kappa, const ExtendedPhasePoint& point, double tol = 1e-11,
    double fd_step = 1e-4) {
    if (field.dimension != 1)
        throw std::invalid_argument("transport_residual: d = 1 only");

    auto b0 = [&](double kap, double T, double X, double Th, double Xi) {
        ExtendedPhasePoint p;
        p.t = T;
        p.x = {X};
        p.tau = Th;
        p.xi = {Xi};
        ExtendedPhasePoint q = technical_flow_inverse(field, h, kap, p, tol);
        return b(q.t, q.x[0], q.tau, q.xi[0]);
    };

    const double T = point.t, X = point.x[0], tau = point.tau,
                 xi = point.xi[0];
    const double Th = h * h * tau, Xi = h * xi;  // scaled slots of b0
    const double e = fd_step;

    const double dk =
        (b0(kappa + e, T, X, Th, Xi) - b0(kappa - e, T, X, Th, Xi)) /
        (2.0 * e);
    const double dt =
        (b0(kappa, T + e, X, Th, Xi) - b0(kappa, T - e, X, Th, Xi)) /
        (2.0 * e);
    const double dx =
        (b0(kappa, T, X + e, Th, Xi) - b0(kappa, T, X - e, Th, Xi)) /
        (2.0 * e);
    const double dtau =
        (b0(kappa, T, X, Th + e, Xi) - b0(kappa, T, X, Th - e, Xi)) /
        (2.0 * e);
    const double dxi =
        (b0(kappa, T, X, Th, Xi + e) - b0(kappa, T, X, Th, Xi - e)) /
        (2.0 * e);

    // analytic first derivatives of l0 at (kappa; T, X, xi)
    const double u = (1.0 - kappa) * T;
    const double Xl = X - kappa * T * xi;
    const double am1 = field.a1(u, Xl) - 1.0;
    const double ax = field.a1_dx(u, Xl);
    const double at = field.a1_dt(u, Xl);
    const double V = field.v1(u, Xl);
    const double Vx = field.v1_dx(u, Xl);
    const double Vt = field.v1_dt(u, Xl);

    const double l0_dx = -0.5 * T * ax * xi * xi - T * Vx;
    const double l0_dxi = -0.5 * T *
                              (ax * (-kappa * T) * xi * xi +
                               2.0 * am1 * xi) -
                          T * Vx * (-kappa * T);
    const double l0_dt = -0.5 * am1 * xi * xi -
                         0.5 * T * (at * (1.0 - kappa) + ax * (-kappa * xi)) *
                             xi * xi -
                         V - T * (Vt * (1.0 - kappa) + Vx * (-kappa * xi));
    const double l0_dtau = 0.0;

    const double lhs = dk + l0_dtau * dt + l0_dxi * dx - h * h * l0_dt * dtau -
                       h * l0_dx * dxi;
    return std::fabs(lhs);
}

} // namespace qhlab
