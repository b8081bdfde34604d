#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qhlab/classical.hpp"
#include "qhlab/coefficients.hpp"
#include "qhlab/cutoffs.hpp"
#include "qhlab/partition.hpp"

namespace qhlab {

struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
};

// Smooth compactly supported phase-space test symbol.
//  arity 2: slots (x, xi)
//  arity 3: slots (t, x, xi)
//  arity 4: slots (t, x, tau, xi)
// Separable structure, when present, enables fast quantization paths:
//  arity 2: factor_x(x) * factor_xi(xi)
//  arity 3: factor_t(t) * spatial(x, xi)
//  arity 4: pair_ttau(t, tau) * pair_xxi(x, xi)
struct PhaseSymbol {
    int arity = 2;
    std::function<std::complex<double>(const double*)> eval_fn;
    std::vector<Interval> support;  // one per slot; eval vanishes outside
    std::string form = "custom";

    // optional separable structure
    std::function<std::complex<double>(double)> factor_x, factor_xi, factor_t;
    std::shared_ptr<PhaseSymbol> pair_ttau, pair_xxi, spatial;

    bool separable_spatial() const {
        return static_cast<bool>(factor_x) && static_cast<bool>(factor_xi);
    }
    bool separable_pairs() const {
        return pair_ttau != nullptr && pair_xxi != nullptr;
    }

    std::complex<double> eval(const double* args) const {
        for (int i = 0; i < arity; ++i)
            if (args[i] < support[static_cast<std::size_t>(i)].lo ||
                args[i] > support[static_cast<std::size_t>(i)].hi)
                return 0.0;
        return eval_fn(args);
    }
    std::complex<double> operator()(double x, double xi) const {
        const double a[2] = {x, xi};
        return eval(a);
    }
    std::complex<double> operator()(double t, double x, double xi) const {
        const double a[3] = {t, x, xi};
        return eval(a);
    }
    std::complex<double> operator()(double t, double x, double tau,
                                    double xi) const {
        const double a[4] = {t, x, tau, xi};
        return eval(a);
    }
};

// Gaussian-windowed bump factor profile: compact support |u - c| < r.
inline PhaseSymbol symbol_bump2(double xc, double xic, double rx, double rxi) {
    PhaseSymbol s;
    s.arity = 2;
    s.form = "gaussian-bump";
    s.support = {{xc - rx, xc + rx}, {xic - rxi, xic + rxi}};
    s.factor_x = [=](double x) {
        return std::complex<double>(bump_factor(x, xc, rx));
    };
    s.factor_xi = [=](double xi) {
        return std::complex<double>(bump_factor(xi, xic, rxi));
    };
    s.eval_fn = [=](const double* a) {
        return std::complex<double>(bump_factor(a[0], xc, rx) *
                                    bump_factor(a[1], xic, rxi));
    };
    return s;
}

// Plateau factor: identically 1 on |u - c| <= r, 0 beyond |u - c| >= 2r.
inline PhaseSymbol symbol_plateau2(double xc, double xic, double rx,
                                   double rxi) {
    PhaseSymbol s;
    s.arity = 2;
    s.form = "plateau";
    s.support = {{xc - 2 * rx, xc + 2 * rx}, {xic - 2 * rxi, xic + 2 * rxi}};
    s.factor_x = [=](double x) {
        return std::complex<double>(mollified_step(std::fabs(x - xc) / rx));
    };
    s.factor_xi = [=](double xi) {
        return std::complex<double>(mollified_step(std::fabs(xi - xic) / rxi));
    };
    s.eval_fn = [=](const double* a) {
        return std::complex<double>(
            mollified_step(std::fabs(a[0] - xc) / rx) *
            mollified_step(std::fabs(a[1] - xic) / rxi));
    };
    return s;
}

// x-only multiplier symbol g(x) (full xi support)
inline PhaseSymbol symbol_x_only(std::function<double(double)> g,
                                 Interval x_support) {
    PhaseSymbol s;
    s.arity = 2;
    s.form = "x-only";
    s.support = {x_support, {}};
    auto gs = std::make_shared<std::function<double(double)>>(std::move(g));
    s.factor_x = [gs](double x) { return std::complex<double>((*gs)(x)); };
    s.factor_xi = [](double) { return std::complex<double>(1.0); };
    s.eval_fn = [gs](const double* a) {
        return std::complex<double>((*gs)(a[0]));
    };
    return s;
}

// xi-only symbol g(xi) (full x support)
inline PhaseSymbol symbol_xi_only(std::function<double(double)> g,
                                  Interval xi_support) {
    PhaseSymbol s;
    s.arity = 2;
    s.form = "xi-only";
    s.support = {{}, xi_support};
    auto gs = std::make_shared<std::function<double(double)>>(std::move(g));
    s.factor_x = [](double) { return std::complex<double>(1.0); };
    s.factor_xi = [gs](double xi) { return std::complex<double>((*gs)(xi)); };
    s.eval_fn = [gs](const double* a) {
        return std::complex<double>((*gs)(a[1]));
    };
    return s;
}

// arity-3 product symbol g(t) * b(x, xi)
inline PhaseSymbol symbol_time_window(double tc, double rt,
                                      const PhaseSymbol& spatial) {
    if (spatial.arity != 2)
        throw std::invalid_argument("symbol_time_window: spatial arity != 2");
    PhaseSymbol s;
    s.arity = 3;
    s.form = "time-window*" + spatial.form;
    s.support = {{tc - rt, tc + rt}, spatial.support[0], spatial.support[1]};
    s.factor_t = [=](double t) {
        return std::complex<double>(bump_factor(t, tc, rt));
    };
    s.spatial = std::make_shared<PhaseSymbol>(spatial);
    auto sp = s.spatial;
    s.eval_fn = [=](const double* a) {
        return bump_factor(a[0], tc, rt) * (*sp)(a[1], a[2]);
    };
    return s;
}

// arity-4 product symbol across the (t,tau) and (x,xi) pairs
inline PhaseSymbol symbol_spacetime_bump(double tc, double rt, double xc,
                                         double rx, double tauc, double rtau,
                                         double xic, double rxi) {
    PhaseSymbol s;
    s.arity = 4;
    s.form = "spacetime-bump";
    s.support = {{tc - rt, tc + rt},
                 {xc - rx, xc + rx},
                 {tauc - rtau, tauc + rtau},
                 {xic - rxi, xic + rxi}};
    s.pair_ttau = std::make_shared<PhaseSymbol>(symbol_bump2(tc, tauc, rt, rtau));
    s.pair_xxi = std::make_shared<PhaseSymbol>(symbol_bump2(xc, xic, rx, rxi));
    auto pt = s.pair_ttau;
    auto px = s.pair_xxi;
    s.eval_fn = [pt, px](const double* a) {
        return (*pt)(a[0], a[2]) * (*px)(a[1], a[3]);
    };
    return s;
}

// Free Egorov shear: (x, xi) -> a(x + t xi, xi), support box updated.
inline PhaseSymbol egorov_conjugate(const PhaseSymbol& a, double t) {
    if (a.arity != 2)
        throw std::invalid_argument("egorov_conjugate: arity != 2");
    PhaseSymbol s;
    s.arity = 2;
    s.form = a.form + "+shear";
    const Interval& bx = a.support[0];
    const Interval& bxi = a.support[1];
    Interval nx;
    if (bx.finite() && bxi.finite()) {
        const double s1 = t * bxi.lo, s2 = t * bxi.hi;
        nx.lo = bx.lo - std::max(s1, s2);
        nx.hi = bx.hi - std::min(s1, s2);
    }
    s.support = {nx, bxi};
    auto base = std::make_shared<PhaseSymbol>(a);
    s.eval_fn = [base, t](const double* arg) {
        return (*base)(arg[0] + t * arg[1], arg[1]);
    };
    if (t == 0.0) {
        s.factor_x = a.factor_x;
        s.factor_xi = a.factor_xi;
    }
    return s;
}

// Four-way cutoff splitting of the technical-Hamiltonian symbol
// l(t,x,xi) = -(1/2) t {a((1-k)t, x-k t xi) - 1} xi^2
//             - t V((1-k)t, x-k t xi)   (d = 1):
//   chi_I(t) = chi(|t|/2M), chi_II(xi) = g(h|xi|) with g = 1 on
//   [eps_cut/2, 2M], chi_III(x) = chi(|x|/2M);
//   l = (1-chi_I) l + chi_I (1-chi_II) l + chi_I chi_II (1-chi_III) l
//       + chi_I chi_II chi_III l.
struct SymbolSplit {
    std::function<double(double, double, double)> l;  // full symbol
    std::function<double(double, double, double)> l_I, l_II, l_III, l_IV;
};

inline SymbolSplit split_symbol_l(const CoefficientField& field, double kappa,
                                  double h, double M, double eps_cut) {
    if (!(M > eps_cut && eps_cut > 0.0))
        throw std::invalid_argument("split_symbol_l: need M > eps_cut > 0");
    if (field.dimension != 1)
        throw std::invalid_argument("split_symbol_l: d = 1 only");
    auto fld = std::make_shared<CoefficientField>(field);
    auto l = [fld, kappa](double t, double x, double xi) {
        ExtendedPhasePoint p;
        p.t = t;
        p.x = {x};
        p.tau = 0.0;
        p.xi = {xi};
        return eval_l0(*fld, kappa, p);
    };
    auto chi_I = [M](double t) { return mollified_step(std::fabs(t) / (2 * M)); };
    auto chi_II = [M, eps_cut, h](double xi) {
        const double lam = h * std::fabs(xi);
        return mollified_step(lam / (2 * M)) *
               (1.0 - mollified_step(4.0 * lam / eps_cut));
    };
    auto chi_III = [M](double x) { return mollified_step(std::fabs(x) / (2 * M)); };

    SymbolSplit out;
    out.l = l;
    out.l_I = [l, chi_I](double t, double x, double xi) {
        return (1.0 - chi_I(t)) * l(t, x, xi);
    };
    out.l_II = [l, chi_I, chi_II](double t, double x, double xi) {
        return chi_I(t) * (1.0 - chi_II(xi)) * l(t, x, xi);
    };
    out.l_III = [l, chi_I, chi_II, chi_III](double t, double x, double xi) {
        return chi_I(t) * chi_II(xi) * (1.0 - chi_III(x)) * l(t, x, xi);
    };
    out.l_IV = [l, chi_I, chi_II, chi_III](double t, double x, double xi) {
        return chi_I(t) * chi_II(xi) * chi_III(x) * l(t, x, xi);
    };
    return out;
}

// Flow-adapted shifted symbol family (d = 1):
//   b_{m,n}(t,x,xi) = chi_{m,n}((x-y) sgn(xi), h^{-1}|xi|)
//                     * a(t + eps m 2^{-n}, h x + eps m 2^{-n} xi, xi)
// together with the unshifted terms
//   a_{m,n}(t,x,xi) = chi_{m,n}((x-y) sgn(xi) - eps m 2^{-n} h^{-1} xi^2/|xi|,
//                     h^{-1}|xi|) * a(t, h x, xi)
// whose sum over the active indices reconstructs a(t, hx, xi).
class ShiftedSymbolFamily {
public:
    ShiftedSymbolFamily(const PhaseSymbol& a, PartitionFamily partition,
                        double h, double y)
        : a_(std::make_shared<PhaseSymbol>(a)),
          part_(std::move(partition)),
          h_(h),
          y_(y) {
        if (a.arity != 3)
            throw std::invalid_argument("ShiftedSymbolFamily: arity != 3");
    }

    double b(int m, int n, double t, double x, double xi) const {
        if (xi == 0.0) return 0.0;
        const double sgn = xi > 0.0 ? 1.0 : -1.0;
        const double cut = part_.chi(m, n, (x - y_) * sgn, std::fabs(xi) / h_);
        if (cut == 0.0) return 0.0;
        const double shift = part_.eps() * static_cast<double>(m) *
                             std::ldexp(1.0, -n);
        return cut *
               std::real((*a_)(t + shift, h_ * x + shift * xi, xi));
    }

    double a_term(int m, int n, double t, double x, double xi) const {
        if (xi == 0.0) return 0.0;
        const double sgn = xi > 0.0 ? 1.0 : -1.0;
        const double nu = std::fabs(xi) / h_;
        const double shift = part_.eps() * static_cast<double>(m) *
                             std::ldexp(nu, -n);
        const double cut = part_.chi(m, n, (x - y_) * sgn - shift, nu);
        if (cut == 0.0) return 0.0;
        return cut * std::real((*a_)(t, h_ * x, xi));
    }

    std::vector<std::pair<int, int>> active_indices(double x,
                                                    double xi) const {
        if (xi == 0.0) return {};
        const double sgn = xi > 0.0 ? 1.0 : -1.0;
        return part_.active_indices((x - y_) * sgn, std::fabs(xi) / h_);
    }

    double reconstruct(double t, double x, double xi) const {
        double s = 0.0;
        for (auto [m, n] : active_indices(x, xi))
            s += a_term(m, n, t, x, xi);
        return s;
    }

    const PartitionFamily& partition() const { return part_; }
    double h() const { return h_; }

private:
    std::shared_ptr<PhaseSymbol> a_;
    PartitionFamily part_;
    double h_;
    double y_;
};

inline ShiftedSymbolFamily shifted_symbol_family(const PhaseSymbol& a,
                                                 const PartitionFamily& part,
                                                 double h, double y) {
    return ShiftedSymbolFamily(a, part, h, y);
}

} // namespace qhlab
