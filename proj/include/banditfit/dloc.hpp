#pragma once

#include "banditfit/box_minimizer.hpp"
#include "banditfit/core_model.hpp"
#include "banditfit/parallel.hpp"
#include "banditfit/types.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace banditfit {

/// Direct multistart local minimisation of the native (nonconvex) fitting
/// problem over (alpha, beta).
struct DlocOptions {
    int restarts = 5;
    BoxMinOptions local{1000, 1e-8, 1e-4};
    std::uint64_t seed = 0;
    /// Worker threads for restart-level parallelism (0 = all cores).
    std::size_t jobs = 1;

    void validate() const {
        if (restarts < 1) throw DomainError("dloc options: restarts must be >= 1");
    }
};

struct DlocGradient {
    std::vector<Vector> d_alpha;
    std::vector<Vector> d_beta;
};

struct DlocFit {
    RLParams params;
    double nll = 0.0;
    /// Objective reached by each restart, in restart order.
    std::vector<double> restart_nll;
};

/// Negative log-likelihood of an episode under native parameters. O(mnk).
inline double dloc_objective(const RLParams& params, const Episode& ep, const ModelConfig& cfg) {
    check_episode(ep, cfg);
    return episode_nll(params, ep, cfg);
}

/// Gradient of dloc_objective by reverse accumulation through the value
/// recursion. For each signal i and action j the adjoint is
///   lambda(t) = w_i (pi_j(t) - y_j(t)) + (1 - alpha) lambda(t + 1),
/// and the parameter derivatives are sums of lambda(t) against the local
/// partials of the update. Shared parameters accumulate over actions.
inline DlocGradient dloc_gradient(const RLParams& params, const Episode& ep, const ModelConfig& cfg,
                                  double* value = nullptr) {
    check_episode(ep, cfg);
    const auto trace = value_recursion(params, ep.rewards, cfg);
    const auto n = static_cast<Eigen::Index>(cfg.n);
    const auto m = static_cast<Eigen::Index>(cfg.m);

    Matrix d = policy_trace(trace.x);
    double nll = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const int a = ep.actions[static_cast<std::size_t>(t)];
        nll -= trace.x(t, a) - log_sum_exp(trace.x.row(t));
        d(t, a) -= 1.0;
    }
    if (value) *value = nll;

    DlocGradient out;
    const auto rows = static_cast<Eigen::Index>(params.shared ? 1 : cfg.m);
    for (std::size_t i = 0; i < cfg.k; ++i) {
        Vector ga = Vector::Zero(rows);
        Vector gb = Vector::Zero(rows);
        const auto& u = ep.rewards[i];
        const auto& z = trace.z[i];
        const double wi = cfg.w(static_cast<Eigen::Index>(i));
        for (Eigen::Index j = 0; j < m; ++j) {
            const double a = params.a(i, static_cast<std::size_t>(j));
            const double b = params.b(i, static_cast<std::size_t>(j));
            const Eigen::Index r = params.shared ? 0 : j;
            double lambda = 0.0;
            double sa = 0.0;
            double sb = 0.0;
            for (Eigen::Index t = n - 1; t >= 0; --t) {
                lambda = wi * d(t, j) + (1.0 - a) * lambda;
                const double z_prev = t > 0 ? z(t - 1, j) : 0.0;
                sa += lambda * (b * u(t, j) - z_prev);
                sb += lambda * a * u(t, j);
            }
            ga(r) += sa;
            gb(r) += sb;
        }
        out.d_alpha.push_back(std::move(ga));
        out.d_beta.push_back(std::move(gb));
    }
    return out;
}

namespace detail {

/// Packs parameters as [alpha^(1), beta^(1), alpha^(2), beta^(2), ...].
inline Vector pack_params(const RLParams& p) {
    const auto rows = p.alpha.empty() ? 0 : p.alpha[0].size();
    Vector v(static_cast<Eigen::Index>(2 * p.signals()) * rows);
    for (std::size_t i = 0; i < p.signals(); ++i) {
        v.segment(static_cast<Eigen::Index>(2 * i) * rows, rows) = p.alpha[i];
        v.segment(static_cast<Eigen::Index>(2 * i + 1) * rows, rows) = p.beta[i];
    }
    return v;
}

inline RLParams unpack_params(const Vector& v, std::size_t k, Eigen::Index rows, bool shared) {
    RLParams p;
    p.shared = shared;
    for (std::size_t i = 0; i < k; ++i) {
        p.alpha.push_back(v.segment(static_cast<Eigen::Index>(2 * i) * rows, rows));
        p.beta.push_back(v.segment(static_cast<Eigen::Index>(2 * i + 1) * rows, rows));
    }
    return p;
}

}  // namespace detail

/// Best-of-restarts projected quasi-Newton descent in the parameter box
/// alpha in [0,1], beta in cfg.beta_box. Restart r starts from a uniform
/// draw seeded by (seed, r); restarts may run concurrently.
inline DlocFit fit_dloc(const Episode& ep, const ModelConfig& cfg, const DlocOptions& opts = {}) {
    cfg.validate();
    check_episode(ep, cfg);
    opts.validate();
    for (const auto& b : cfg.beta_box)
        if (!std::isfinite(b.hi)) throw DomainError("fit_dloc: beta box must be bounded");

    const auto rows = static_cast<Eigen::Index>(cfg.kernel_rows());
    const auto dim = static_cast<Eigen::Index>(2 * cfg.k) * rows;
    Vector lo(dim), hi(dim);
    for (std::size_t i = 0; i < cfg.k; ++i) {
        lo.segment(static_cast<Eigen::Index>(2 * i) * rows, rows).setZero();
        hi.segment(static_cast<Eigen::Index>(2 * i) * rows, rows).setOnes();
        lo.segment(static_cast<Eigen::Index>(2 * i + 1) * rows, rows).setConstant(cfg.beta_box[i].lo);
        hi.segment(static_cast<Eigen::Index>(2 * i + 1) * rows, rows).setConstant(cfg.beta_box[i].hi);
    }

    auto fg = [&](const Vector& v, Vector& grad) {
        const auto p = detail::unpack_params(v, cfg.k, rows, cfg.shared);
        double f = 0.0;
        const auto gr = dloc_gradient(p, ep, cfg, &f);
        DlocGradient packed = gr;
        RLParams as_params{packed.d_alpha, packed.d_beta, cfg.shared};
        grad = detail::pack_params(as_params);
        return f;
    };

    std::vector<BoxMinResult> results(static_cast<std::size_t>(opts.restarts));
    parallel_for(results.size(), opts.jobs, [&](std::size_t r) {
        std::mt19937_64 rng(derive_seed(opts.seed, r));
        Vector x0(dim);
        for (Eigen::Index q = 0; q < dim; ++q) x0(q) = std::uniform_real_distribution<double>(lo(q), hi(q))(rng);
        results[r] = box_minimize(fg, x0, lo, hi, opts.local);
    });

    DlocFit fit;
    fit.nll = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t r = 0; r < results.size(); ++r) {
        fit.restart_nll.push_back(results[r].f);
        if (results[r].f < fit.nll) {
            fit.nll = results[r].f;
            best = r;
        }
    }
    fit.params = detail::unpack_params(results[best].x, cfg.k, rows, cfg.shared);
    return fit;
}

}  // namespace banditfit
