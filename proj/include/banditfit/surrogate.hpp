#pragma once

#include "banditfit/core_model.hpp"
#include "banditfit/features.hpp"
#include "banditfit/isotonic.hpp"
#include "banditfit/types.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace banditfit {

struct SolverOptions {
    int max_iters = 20000;
    double tol_rel_obj = 1e-9;
    /// Threshold on the norm of the projected-gradient mapping.
    double tol_pg = 1e-7;
    /// Function-value adaptive restart of the momentum sequence.
    bool restart = true;
    double backtrack = 0.5;
    /// Step enlargement tried at the start of every iteration (1 = never).
    double step_growth = 1.25;
    /// Scale gradient steps by the diagonal of the kernel map's Gram matrix.
    bool precondition = true;
    /// Newton refinement rounds after the first-order phase (0 = off).
    int polish_rounds = 30;
    /// Skip refinement when the solution has more free blocks than this.
    std::size_t polish_max_vars = 600;
    /// Optional per-signal upper bound on the first kernel column (beta_max).
    std::vector<double> beta_cap;
    /// Keep the objective of every accepted iterate in the solution.
    bool record_history = false;

    void validate() const {
        if (max_iters < 1) throw DomainError("solver options: max_iters must be >= 1");
        if (!(tol_rel_obj > 0.0) || !(tol_pg > 0.0)) throw DomainError("solver options: tolerances must be > 0");
        if (!(backtrack > 0.0 && backtrack < 1.0)) throw DomainError("solver options: backtrack must be in (0,1)");
        if (polish_rounds < 0) throw DomainError("solver options: polish_rounds must be >= 0");
        if (!(step_growth >= 1.0)) throw DomainError("solver options: step_growth must be >= 1");
        for (double c : beta_cap)
            if (!(c >= 0.0)) throw DomainError("solver options: beta cap must be >= 0");
    }
};

/// Data of the relaxed fitting problem for one episode.
struct SurrogateProblem {
    LaggedRewards lagged;
    std::vector<int> actions;
    Vector w;
    bool shared = false;
    SolverOptions options;

    std::size_t rows() const { return shared ? 1 : lagged.arms(); }

    static SurrogateProblem from_episode(const Episode& ep, const ModelConfig& cfg, SolverOptions opts = {}) {
        cfg.validate();
        check_episode(ep, cfg);
        opts.validate();
        if (!opts.beta_cap.empty() && opts.beta_cap.size() != cfg.k)
            throw ShapeError("solver options: beta_cap needs one entry per signal");
        return SurrogateProblem{LaggedRewards(ep.rewards, cfg.horizon), ep.actions, cfg.w, cfg.shared, std::move(opts)};
    }

    double cap(std::size_t i) const {
        return options.beta_cap.empty() ? std::numeric_limits<double>::infinity() : options.beta_cap[i];
    }

    std::vector<Matrix> zeros() const {
        std::vector<Matrix> G;
        for (std::size_t i = 0; i < lagged.signals(); ++i)
            G.push_back(Matrix::Zero(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(lagged.horizon())));
        return G;
    }
};

enum class SolveStatus { Converged, MaxIters };

inline const char* to_string(SolveStatus s) { return s == SolveStatus::Converged ? "converged" : "max_iters"; }

struct SurrogateSolution {
    std::vector<Matrix> G;
    Matrix x;
    Matrix pi;
    /// Optimal negative log-likelihood of the relaxed problem.
    double J_lb = 0.0;
    int iters = 0;
    SolveStatus status = SolveStatus::MaxIters;
    double pg_norm = 0.0;
    std::vector<double> history;
};

struct ValueAndGradient {
    double value = 0.0;
    std::vector<Matrix> grad;
};

namespace detail {

inline double nll_from_values(const Matrix& x, const std::vector<int>& actions, Matrix* dx) {
    double v = 0.0;
    if (dx) dx->resize(x.rows(), x.cols());
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
        const double mx = x.row(t).maxCoeff();
        double s = 0.0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) s += std::exp(x(t, j) - mx);
        const int a = actions[static_cast<std::size_t>(t)];
        v += mx + std::log(s) - x(t, a);
        if (dx) {
            for (Eigen::Index j = 0; j < x.cols(); ++j) (*dx)(t, j) = std::exp(x(t, j) - mx) / s;
            (*dx)(t, a) -= 1.0;
        }
    }
    return v;
}

inline double dot(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i].cwiseProduct(b[i]).sum();
    return s;
}

inline double sq_norm(const std::vector<Matrix>& a) {
    double s = 0.0;
    for (const auto& m : a) s += m.squaredNorm();
    return s;
}

}  // namespace detail

/// Surrogate objective value only.
inline double surrogate_nll(const std::vector<Matrix>& G, const SurrogateProblem& prob) {
    const auto vals = kernel_values(G, prob.lagged, prob.w);
    return detail::nll_from_values(vals.x, prob.actions, nullptr);
}

/// Negative log-likelihood of the relaxed problem and its gradient with
/// respect to every kernel matrix.
inline ValueAndGradient nll_and_gradient(const std::vector<Matrix>& G, const SurrogateProblem& prob) {
    const auto vals = kernel_values(G, prob.lagged, prob.w);
    Matrix dx;
    ValueAndGradient out;
    out.value = detail::nll_from_values(vals.x, prob.actions, &dx);
    if (!std::isfinite(out.value)) throw NumericError("surrogate objective is not finite");
    out.grad = kernel_adjoint(dx, prob.lagged, prob.w, prob.rows());
    return out;
}

/// Projects every kernel matrix onto the relaxed feasible set, in the norm
/// weighted by `D` when given.
inline void project_kernels(std::vector<Matrix>& G, const SurrogateProblem& prob,
                            const std::vector<Matrix>* D = nullptr) {
    for (std::size_t i = 0; i < G.size(); ++i) {
        if (!D) {
            project_kernel_rows(G[i], prob.cap(i));
            continue;
        }
        for (Eigen::Index j = 0; j < G[i].rows(); ++j)
            project_monotone_nonneg_weighted_inplace(G[i].row(j), (*D)[i].row(j), prob.cap(i));
    }
}

/// Diagonal of the Gram matrix of the kernel map, rescaled to mean one.
/// Entries that are (nearly) zero are raised to a small floor.
inline std::vector<Matrix> kernel_diagonal(const SurrogateProblem& prob) {
    const auto n = static_cast<Eigen::Index>(prob.lagged.steps());
    const auto m = static_cast<Eigen::Index>(prob.lagged.arms());
    const auto L = static_cast<Eigen::Index>(prob.lagged.horizon());
    std::vector<Matrix> D = prob.zeros();
    double total = 0.0;
    Eigen::Index count = 0;
    for (std::size_t i = 0; i < D.size(); ++i) {
        const auto& u = prob.lagged.rewards(i);
        const double wi = prob.w(static_cast<Eigen::Index>(i));
        for (Eigen::Index j = 0; j < m; ++j) {
            const Eigen::Index gj = D[i].rows() == 1 ? 0 : j;
            // tail(r) = sum_{s < n - r} u(s, j)^2
            double acc = u.col(j).head(n - L + 1).squaredNorm();
            for (Eigen::Index r = L - 1; r >= 0; --r) {
                D[i](gj, r) += wi * wi * acc;
                if (r > 0) acc += u(n - r, j) * u(n - r, j);
            }
        }
        total += D[i].sum();
        count += D[i].size();
    }
    const double mean = count > 0 ? total / static_cast<double>(count) : 0.0;
    if (!(mean > 0.0)) {
        for (auto& d : D) d.setOnes();
        return D;
    }
    for (auto& d : D) d = (d / mean).cwiseMax(1e-3);
    return D;
}

/// Upper bound on the gradient Lipschitz constant: half the squared operator
/// norm of the kernel map (softmax curvature is at most 1/2), estimated by
/// power iteration. With `D`, the map is taken in the D-weighted metric.
inline double lipschitz_estimate(const SurrogateProblem& prob, const std::vector<Matrix>* D = nullptr,
                                 int iters = 50) {
    std::vector<Matrix> v = prob.zeros();
    for (auto& g : v) g.setOnes();
    double nrm = std::sqrt(detail::sq_norm(v));
    double lam = 0.0;
    for (int it = 0; it < iters; ++it) {
        for (auto& g : v) g /= nrm;
        if (D)
            for (std::size_t i = 0; i < v.size(); ++i) v[i].array() /= (*D)[i].array().sqrt();
        const auto x = kernel_values(v, prob.lagged, prob.w).x;
        v = kernel_adjoint(x, prob.lagged, prob.w, prob.rows());
        if (D)
            for (std::size_t i = 0; i < v.size(); ++i) v[i].array() /= (*D)[i].array().sqrt();
        nrm = std::sqrt(detail::sq_norm(v));
        if (nrm == 0.0) return 0.0;
        lam = nrm;
    }
    // Power iteration approaches from below; pad slightly.
    return 0.5 * lam * 1.01;
}

namespace detail {

struct ProxStep {
    std::vector<Matrix> G;
    double f = 0.0;
    /// Squared norm of the gradient mapping in the solver metric.
    double pg2 = 0.0;
};

/// One projected-gradient step from `from` with backtracking on `step`.
inline ProxStep prox_step(const std::vector<Matrix>& from, const ValueAndGradient& at, double& step,
                          const SurrogateProblem& prob, const std::vector<Matrix>* D, int it) {
    const auto& opt = prob.options;
    ProxStep out;
    for (int bt = 0; bt < 60; ++bt) {
        out.G = from;
        for (std::size_t i = 0; i < out.G.size(); ++i) {
            if (D)
                out.G[i].array() -= step * at.grad[i].array() / (*D)[i].array();
            else
                out.G[i] -= step * at.grad[i];
        }
        project_kernels(out.G, prob, D);
        out.f = surrogate_nll(out.G, prob);
        double d2 = 0.0;
        for (std::size_t i = 0; i < out.G.size(); ++i) {
            const auto diff = (out.G[i] - from[i]).array();
            d2 += D ? ((*D)[i].array() * diff.square()).sum() : diff.square().sum();
        }
        out.pg2 = d2 / (step * step);
        double lin = 0.0;
        for (std::size_t i = 0; i < out.G.size(); ++i) lin += at.grad[i].cwiseProduct(out.G[i] - from[i]).sum();
        const double model = at.value + lin + d2 / (2.0 * step);
        if (std::isfinite(out.f) && out.f <= model + 1e-12 * std::max(1.0, std::abs(at.value))) return out;
        step *= opt.backtrack;
    }
    throw NumericError("surrogate solver: backtracking failed at iteration " + std::to_string(it));
}

/// A run of equal kernel entries in one row that is free to move: neither
/// at zero nor pinned to the first-lag cap.
struct KernelGroup {
    std::size_t signal;
    Eigen::Index row;
    Eigen::Index first;
    Eigen::Index last;
};

inline std::vector<KernelGroup> free_groups(const std::vector<Matrix>& G, const SurrogateProblem& prob) {
    std::vector<KernelGroup> out;
    for (std::size_t i = 0; i < G.size(); ++i) {
        const auto L = G[i].cols();
        for (Eigen::Index j = 0; j < G[i].rows(); ++j) {
            Eigen::Index c = 0;
            while (c < L) {
                Eigen::Index e = c;
                while (e + 1 < L && G[i](j, e + 1) == G[i](j, c)) ++e;
                const double v = G[i](j, c);
                if (v > 0.0 && !(c == 0 && v >= prob.cap(i))) out.push_back({i, j, c, e});
                c = e + 1;
            }
        }
    }
    return out;
}

/// Newton step on the values of the free groups, followed by projection and
/// a halving line search. Returns true if it lowered the objective.
inline bool newton_polish(std::vector<Matrix>& G, double& f, const SurrogateProblem& prob, std::size_t max_vars) {
    const auto groups = free_groups(G, prob);
    const auto nf = static_cast<Eigen::Index>(groups.size());
    if (nf == 0 || groups.size() > max_vars) return false;
    const auto n = static_cast<Eigen::Index>(prob.lagged.steps());
    const auto m = static_cast<Eigen::Index>(prob.lagged.arms());

    // Row t * m + j holds d x(t, j) / d (group value).
    Matrix J = Matrix::Zero(n * m, nf);
    for (Eigen::Index q = 0; q < nf; ++q) {
        const auto& gr = groups[static_cast<std::size_t>(q)];
        const auto& u = prob.lagged.rewards(gr.signal);
        const double wi = prob.w(static_cast<Eigen::Index>(gr.signal));
        for (Eigen::Index j = 0; j < m; ++j) {
            if (G[gr.signal].rows() != 1 && j != gr.row) continue;
            for (Eigen::Index c = gr.first; c <= gr.last; ++c)
                for (Eigen::Index t = c; t < n; ++t) J(t * m + j, q) += wi * u(t - c, j);
        }
    }

    const Matrix pi = policy_trace(kernel_values(G, prob.lagged, prob.w).x);
    Vector g = Vector::Zero(nf);
    Matrix H = Matrix::Zero(nf, nf);
    for (Eigen::Index t = 0; t < n; ++t) {
        const auto Jt = J.middleRows(t * m, m);
        const Vector p = pi.row(t).transpose();
        Vector r = p;
        r(prob.actions[static_cast<std::size_t>(t)]) -= 1.0;
        g.noalias() += Jt.transpose() * r;
        const Vector pJ = Jt.transpose() * p;
        H.noalias() += Jt.transpose() * p.asDiagonal() * Jt;
        H.noalias() -= pJ * pJ.transpose();
    }
    const double damp = 1e-12 * std::max(1.0, H.diagonal().maxCoeff());
    H.diagonal().array() += damp;
    const Vector d = -H.ldlt().solve(g);
    if (!d.allFinite() || g.dot(d) >= 0.0) return false;

    double s = 1.0;
    for (int ls = 0; ls < 30; ++ls, s *= 0.5) {
        std::vector<Matrix> trial = G;
        for (Eigen::Index q = 0; q < nf; ++q) {
            const auto& gr = groups[static_cast<std::size_t>(q)];
            trial[gr.signal].row(gr.row).segment(gr.first, gr.last - gr.first + 1).array() += s * d(q);
        }
        project_kernels(trial, prob);
        const double ft = surrogate_nll(trial, prob);
        if (std::isfinite(ft) && ft < f) {
            G = std::move(trial);
            f = ft;
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// Solves the relaxed convex fitting problem by accelerated projected
/// gradient with backtracking and function-value restart, starting at G = 0.
///
/// Accepted iterates never increase the objective: when a momentum step
/// would, the momentum is reset and a plain projected-gradient step is taken
/// from the current iterate instead. With `polish`, the result is refined by
/// Newton steps on its block structure, alternated with projected-gradient
/// steps so blocks can split.
inline SurrogateSolution solve_surrogate(const SurrogateProblem& prob) {
    const auto& opt = prob.options;
    opt.validate();

    SurrogateSolution sol;
    std::vector<Matrix> G = prob.zeros();
    double f = surrogate_nll(G, prob);
    if (!std::isfinite(f)) throw NumericError("surrogate objective is not finite at G=0");

    std::vector<Matrix> D;
    if (opt.precondition) D = kernel_diagonal(prob);
    const std::vector<Matrix>* Dp = opt.precondition ? &D : nullptr;
    const double lip = lipschitz_estimate(prob, Dp);
    sol.status = SolveStatus::Converged;
    if (lip == 0.0) {
        // Objective does not depend on G (e.g. all-zero rewards).
        sol.G = std::move(G);
        sol.iters = 0;
        sol.pg_norm = 0.0;
    } else {
        double step = 1.0 / lip;
        std::vector<Matrix> Y = G;
        double momentum = 1.0;
        sol.status = SolveStatus::MaxIters;
        // Relative-decrease test must hold on this many consecutive iterations.
        constexpr int kStallWindow = 5;
        int small_steps = 0;
        int it = 0;
        for (; it < opt.max_iters; ++it) {
            step *= opt.step_growth;
            auto vg = nll_and_gradient(Y, prob);
            auto next = detail::prox_step(Y, vg, step, prob, Dp, it);
            if (opt.restart && next.f > f) {
                // Momentum overshoot: restart from the current iterate.
                momentum = 1.0;
                Y = G;
                vg = nll_and_gradient(Y, prob);
                next = detail::prox_step(Y, vg, step, prob, Dp, it);
            }
            if (!std::isfinite(next.f))
                throw NumericError("surrogate objective not finite at iteration " + std::to_string(it));

            const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            const double beta = (momentum - 1.0) / next_momentum;
            Y = next.G;
            for (std::size_t i = 0; i < Y.size(); ++i) Y[i] += beta * (next.G[i] - G[i]);
            momentum = next_momentum;

            const double f_prev = f;
            G = std::move(next.G);
            f = next.f;
            if (opt.record_history) sol.history.push_back(f);
            sol.pg_norm = std::sqrt(next.pg2);
            const double decrease = f_prev - f;
            small_steps = (decrease >= 0.0 && decrease < opt.tol_rel_obj * std::max(1.0, std::abs(f))) ? small_steps + 1 : 0;
            if (sol.pg_norm < opt.tol_pg || small_steps >= kStallWindow) {
                sol.status = SolveStatus::Converged;
                ++it;
                break;
            }
        }
        sol.iters = it;

        if (opt.polish_rounds > 0) {
            for (int r = 0; r < opt.polish_rounds; ++r) {
                const double f0 = f;
                detail::newton_polish(G, f, prob, opt.polish_max_vars);
                const auto vg = nll_and_gradient(G, prob);
                auto next = detail::prox_step(G, vg, step, prob, Dp, it);
                if (next.f <= f) {
                    G = std::move(next.G);
                    f = next.f;
                }
                sol.pg_norm = std::sqrt(next.pg2);
                if (opt.record_history) sol.history.push_back(f);
                if (sol.pg_norm < opt.tol_pg) {
                    sol.status = SolveStatus::Converged;
                    break;
                }
                if (f0 - f <= 1e-15 * std::max(1.0, std::abs(f))) break;
            }
        }
        sol.G = std::move(G);
    }

    const auto vals = kernel_values(sol.G, prob.lagged, prob.w);
    sol.x = vals.x;
    sol.pi = policy_trace(vals.x);
    sol.J_lb = detail::nll_from_values(vals.x, prob.actions, nullptr);
    return sol;
}

}  // namespace banditfit
