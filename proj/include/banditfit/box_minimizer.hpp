#pragma once

#include "banditfit/types.hpp"

#include <algorithm>
#include <cmath>

namespace banditfit {

struct BoxMinOptions {
    int max_iters = 500;
    /// Stop when the infinity norm of the projected gradient falls below this.
    double tol_pg = 1e-10;
    /// Armijo sufficient-decrease constant.
    double armijo = 1e-4;
};

struct BoxMinResult {
    Vector x;
    double f = 0.0;
    int iters = 0;
    bool converged = false;
};

namespace detail {

inline Vector clamp_box(const Vector& x, const Vector& lo, const Vector& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

inline double projected_gradient_norm(const Vector& x, const Vector& g, const Vector& lo, const Vector& hi) {
    return (clamp_box(x - g, lo, hi) - x).lpNorm<Eigen::Infinity>();
}

}  // namespace detail

/// Projected BFGS with Armijo backtracking along the projection arc.
///
/// `fg(x, g)` returns f(x) and writes the gradient into g. Variables sitting
/// on a bound with the gradient pushing outward are frozen for the step; the
/// quasi-Newton direction is built on the remaining free variables. Falls
/// back to projected steepest descent whenever the quasi-Newton direction
/// fails to make progress.
template <class Fn>
BoxMinResult box_minimize(Fn&& fg, const Vector& x0, const Vector& lo, const Vector& hi, const BoxMinOptions& opt = {}) {
    const auto n = x0.size();
    BoxMinResult res;
    Vector x = detail::clamp_box(x0, lo, hi);
    Vector g(n);
    double f = fg(x, g);
    Matrix H = Matrix::Identity(n, n);
    bool scaled = false;

    for (int it = 0; it < opt.max_iters; ++it) {
        res.iters = it;
        if (detail::projected_gradient_norm(x, g, lo, hi) < opt.tol_pg) {
            res.converged = true;
            break;
        }
        Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
        for (Eigen::Index i = 0; i < n; ++i)
            free(i) = !((x(i) <= lo(i) && g(i) > 0.0) || (x(i) >= hi(i) && g(i) < 0.0));

        auto direction = [&](bool quasi_newton) {
            Vector gf = free.select(g, Vector::Zero(n));
            Vector d = quasi_newton ? Vector(-(H * gf)) : Vector(-gf);
            d = free.select(d, Vector::Zero(n));
            if (!scaled && !quasi_newton) {
                const double gmax = gf.lpNorm<Eigen::Infinity>();
                if (gmax > 1.0) d /= gmax;
            }
            return d;
        };

        bool moved = false;
        for (int attempt = 0; attempt < 2 && !moved; ++attempt) {
            const bool qn = attempt == 0 && scaled;
            Vector d = direction(qn);
            if (qn && g.dot(d) >= 0.0) continue;
            double lambda = 1.0;
            for (int bt = 0; bt < 60; ++bt) {
                Vector xn = detail::clamp_box(x + lambda * d, lo, hi);
                Vector s = xn - x;
                if (s.lpNorm<Eigen::Infinity>() == 0.0) break;
                Vector gn(n);
                const double fn = fg(xn, gn);
                if (std::isfinite(fn) && fn <= f + opt.armijo * g.dot(s)) {
                    const Vector yv = gn - g;
                    const double sy = s.dot(yv);
                    if (sy > 1e-14 * s.norm() * yv.norm()) {
                        if (!scaled) {
                            H = Matrix::Identity(n, n) * (sy / yv.squaredNorm());
                            scaled = true;
                        }
                        const double rho = 1.0 / sy;
                        const Matrix I = Matrix::Identity(n, n);
                        H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
                    }
                    x = xn;
                    g = gn;
                    f = fn;
                    moved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if (!moved && qn) {
                H = Matrix::Identity(n, n);
                scaled = false;
            }
        }
        if (!moved) {
            // No representable decrease along either direction.
            res.converged = true;
            res.iters = it + 1;
            break;
        }
        res.iters = it + 1;
    }
    res.x = x;
    res.f = f;
    return res;
}

}  // namespace banditfit
