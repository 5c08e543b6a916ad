#pragma once

#include "banditfit/banditfit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace bft {

using namespace banditfit;

/// Small random-instance generators shared by the unit and acceptance tests.
struct Gen {
    std::mt19937_64 rng;

    explicit Gen(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    std::size_t index(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    }
    bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

    Vector vec(Eigen::Index n, double lo, double hi) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
        return v;
    }

    Matrix mat(Eigen::Index r, Eigen::Index c, double lo, double hi) {
        Matrix a(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) a(i, j) = uniform(lo, hi);
        return a;
    }

    /// Sparse 0/1 rewards on the chosen arm, like bandit feedback.
    Matrix bandit_rewards(const std::vector<int>& actions, std::size_t m, double p_reward = 0.5) {
        Matrix u = Matrix::Zero(static_cast<Eigen::Index>(actions.size()), static_cast<Eigen::Index>(m));
        for (std::size_t t = 0; t < actions.size(); ++t)
            if (coin(p_reward)) u(static_cast<Eigen::Index>(t), actions[t]) = 1.0;
        return u;
    }

    std::vector<int> actions(std::size_t n, std::size_t m) {
        std::vector<int> a(n);
        for (auto& v : a) v = static_cast<int>(index(0, m - 1));
        return a;
    }

    ModelConfig config(std::size_t m, std::size_t n, std::size_t k, bool shared) {
        ModelConfig cfg;
        cfg.m = m;
        cfg.n = n;
        cfg.k = k;
        cfg.horizon = n;
        cfg.shared = shared;
        cfg.w = vec(static_cast<Eigen::Index>(k), 0.5, 1.5);
        cfg.beta_box.assign(k, Interval{0.0, 5.0});
        return cfg;
    }

    RLParams params(const ModelConfig& cfg, double alpha_lo = 0.0, double alpha_hi = 1.0, double beta_hi = 5.0) {
        RLParams p;
        p.shared = cfg.shared;
        const auto rows = static_cast<Eigen::Index>(cfg.kernel_rows());
        for (std::size_t i = 0; i < cfg.k; ++i) {
            p.alpha.push_back(vec(rows, alpha_lo, alpha_hi));
            p.beta.push_back(vec(rows, 0.0, beta_hi));
        }
        return p;
    }

    /// Random episode; rewards are either bandit-style 0/1 or dense reals.
    Episode episode(const ModelConfig& cfg, bool dense = false) {
        Episode ep;
        ep.actions = actions(cfg.n, cfg.m);
        for (std::size_t i = 0; i < cfg.k; ++i)
            ep.rewards.push_back(dense ? mat(static_cast<Eigen::Index>(cfg.n), static_cast<Eigen::Index>(cfg.m), -1.0, 1.0)
                                       : bandit_rewards(ep.actions, cfg.m));
        return ep;
    }

    /// Random feasible kernels: rows sorted decreasing and nonnegative.
    std::vector<Matrix> kernels(const ModelConfig& cfg, std::size_t cols, double hi = 1.0) {
        std::vector<Matrix> G;
        for (std::size_t i = 0; i < cfg.k; ++i) {
            Matrix g = mat(static_cast<Eigen::Index>(cfg.kernel_rows()), static_cast<Eigen::Index>(cols), 0.0, hi);
            for (Eigen::Index r = 0; r < g.rows(); ++r) {
                std::vector<double> row(static_cast<std::size_t>(g.cols()));
                for (Eigen::Index c = 0; c < g.cols(); ++c) row[static_cast<std::size_t>(c)] = g(r, c);
                std::sort(row.rbegin(), row.rend());
                for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) = row[static_cast<std::size_t>(c)];
            }
            G.push_back(std::move(g));
        }
        return G;
    }
};

/// Relative error with an absolute floor for values near zero.
inline double rel_err(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Exhaustive projection onto {v_1 >= ... >= v_L >= 0} (optionally v_1 <= cap):
/// enumerate every partition of the indices into consecutive blocks and every
/// choice of which blocks sit at 0 or at the cap; keep the feasible candidate
/// closest to the input. Exponential, fine for L <= 6.
inline Vector brute_force_projection(const Vector& v, double cap = std::numeric_limits<double>::infinity()) {
    const auto L = static_cast<int>(v.size());
    Vector best = Vector::Zero(L);
    double best_d = std::numeric_limits<double>::infinity();
    for (unsigned cuts = 0; cuts < (1u << (L - 1)); ++cuts) {
        std::vector<std::pair<int, int>> blocks;
        int start = 0;
        for (int i = 0; i < L - 1; ++i)
            if (cuts & (1u << i)) {
                blocks.push_back({start, i + 1});
                start = i + 1;
            }
        blocks.push_back({start, L});
        const auto nb = blocks.size();
        // state per block: 0 = free mean, 1 = clamped to 0, 2 = clamped to cap
        std::size_t combos = 1;
        for (std::size_t b = 0; b < nb; ++b) combos *= 3;
        for (std::size_t code = 0; code < combos; ++code) {
            Vector cand(L);
            std::size_t c = code;
            for (const auto& [lo, hi] : blocks) {
                const int st = static_cast<int>(c % 3);
                c /= 3;
                double val = 0.0;
                if (st == 0) val = v.segment(lo, hi - lo).mean();
                if (st == 2) {
                    if (!std::isfinite(cap)) val = -1.0;
                    else val = cap;
                }
                cand.segment(lo, hi - lo).setConstant(val);
            }
            bool ok = cand(L - 1) >= -1e-15 && cand(0) <= cap + 1e-15;
            for (int i = 0; i + 1 < L && ok; ++i) ok = cand(i) >= cand(i + 1) - 1e-15;
            if (!ok) continue;
            const double d = (cand - v).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = cand;
            }
        }
    }
    return best;
}

}  // namespace bft
