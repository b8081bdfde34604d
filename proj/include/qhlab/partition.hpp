#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qhlab/cutoffs.hpp"

namespace qhlab {

// Flow-adapted partition of unity on R x (0,inf):
//   eta~(mu, nu) = chi(|mu|/eps) (chi(nu) - chi(4 nu))
//   Y(mu, nu)    = sum_{m,n} eta~(mu - eps m 2^{-n} nu, 2^{-n} nu)
//   chi_{m,n}(mu, nu) = Y(mu + eps m 2^{-n} nu, nu)^{-1} eta~(mu, 2^{-n} nu)
// satisfying supp chi_{m,n} in [-2eps,2eps] x [2^{n-2}, 2^{n+1}],
// derivative bounds C 2^{-nl}, and the shifted sum identity
//   sum chi_{m,n}(mu - eps m 2^{-n} nu, nu) = 1.
class PartitionFamily {
public:
    explicit PartitionFamily(double eps) : eps_(eps) {
        if (!(eps > 0.0))
            throw std::invalid_argument("PartitionFamily: eps must be > 0");
    }

    double eps() const { return eps_; }

    double eta_tilde(double mu, double nu) const {
        if (nu <= 0.0) return 0.0;
        return mollified_step(std::fabs(mu) / eps_) *
               (mollified_step(nu) - mollified_step(4.0 * nu));
    }

    // locally finite normalizer; only n with 2^{-n} nu in [1/4, 2] and m
    // with |mu - eps m 2^{-n} nu| <= 2 eps contribute
    double Y(double mu, double nu) const {
        if (nu <= 0.0) return 0.0;
        const double l2 = std::log2(nu);
        const int n_lo = static_cast<int>(std::floor(l2)) - 2;
        const int n_hi = static_cast<int>(std::ceil(l2)) + 3;
        double s = 0.0;
        for (int n = n_lo; n <= n_hi; ++n) {
            const double scale = std::ldexp(nu, -n);  // 2^{-n} nu
            if (scale < 0.125 || scale > 4.0) continue;
            const double step = eps_ * scale;
            const double m_c = mu / step;
            const int m_lo = static_cast<int>(std::floor(m_c - 2.0 / scale)) - 1;
            const int m_hi = static_cast<int>(std::ceil(m_c + 2.0 / scale)) + 1;
            for (int m = m_lo; m <= m_hi; ++m)
                s += eta_tilde(mu - static_cast<double>(m) * step, scale);
        }
        return s;
    }

    double chi(int m, int n, double mu, double nu) const {
        if (nu <= 0.0) return 0.0;
        const double scale = std::ldexp(nu, -n);
        const double e = eta_tilde(mu, scale);
        if (e == 0.0) return 0.0;
        return e / Y(mu + eps_ * static_cast<double>(m) * scale, nu);
    }

    // indices with chi_{m,n}(mu - eps m 2^{-n} nu, nu) possibly nonzero
    std::vector<std::pair<int, int>> active_indices(double mu,
                                                    double nu) const {
        std::vector<std::pair<int, int>> out;
        if (nu <= 0.0) return out;
        const double l2 = std::log2(nu);
        const int n_lo = static_cast<int>(std::floor(l2)) - 2;
        const int n_hi = static_cast<int>(std::ceil(l2)) + 3;
        for (int n = n_lo; n <= n_hi; ++n) {
            const double scale = std::ldexp(nu, -n);
            if (scale < 0.125 || scale > 4.0) continue;
            const double step = eps_ * scale;
            const double m_c = mu / step;
            const int m_lo = static_cast<int>(std::floor(m_c - 2.0 / scale)) - 1;
            const int m_hi = static_cast<int>(std::ceil(m_c + 2.0 / scale)) + 1;
            for (int m = m_lo; m <= m_hi; ++m) out.emplace_back(m, n);
        }
        return out;
    }

    // left-hand side of the shifted sum identity over the active indices
    double shifted_sum(double mu, double nu) const {
        double s = 0.0;
        for (auto [m, n] : active_indices(mu, nu)) {
            const double step =
                eps_ * static_cast<double>(m) * std::ldexp(nu, -n);
            s += chi(m, n, mu - step, nu);
        }
        return s;
    }

private:
    double eps_;
};

inline PartitionFamily build_partition(double eps) {
    return PartitionFamily(eps);
}

} // namespace qhlab
