#pragma once

#include "banditfit/core_model.hpp"
#include "banditfit/types.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace banditfit {

/// Lagged reward data of an episode truncated to `horizon` lags.
///
/// Conceptually, for signal i and step t the matrix U~(t) has row r equal to
/// u^(i)(t - r) for r < t and zero otherwise. Only the n x m reward matrices
/// are stored; `lag_matrix` materialises a single U~(t) when needed and the
/// kernel map walks the rewards directly.
class LaggedRewards {
public:
    LaggedRewards(std::vector<Matrix> rewards, std::size_t horizon) : rewards_(std::move(rewards)), horizon_(horizon) {
        if (rewards_.empty()) throw ShapeError("lagged rewards: no reward signals");
        const auto n = rewards_[0].rows();
        const auto m = rewards_[0].cols();
        for (const auto& u : rewards_) {
            if (u.rows() != n || u.cols() != m) throw ShapeError("lagged rewards: signals differ in shape");
            if (!u.allFinite()) throw NumericError("lagged rewards: non-finite reward");
        }
        if (horizon_ < 1 || horizon_ > static_cast<std::size_t>(n))
            throw DomainError("lagged rewards: horizon " + std::to_string(horizon_) + " outside [1, " +
                              std::to_string(n) + "]");
    }

    std::size_t signals() const { return rewards_.size(); }
    std::size_t steps() const { return static_cast<std::size_t>(rewards_[0].rows()); }
    std::size_t arms() const { return static_cast<std::size_t>(rewards_[0].cols()); }
    std::size_t horizon() const { return horizon_; }
    const Matrix& rewards(std::size_t i) const { return rewards_.at(i); }

    /// U~^(i)(t+1) restricted to its first `horizon` rows (horizon x m).
    Matrix lag_matrix(std::size_t i, std::size_t t) const {
        const auto& u = rewards_.at(i);
        if (t >= steps()) throw ShapeError("lag_matrix: step out of range");
        Matrix out = Matrix::Zero(static_cast<Eigen::Index>(horizon_), u.cols());
        for (std::size_t r = 0; r < horizon_ && r <= t; ++r)
            out.row(static_cast<Eigen::Index>(r)) = u.row(static_cast<Eigen::Index>(t - r));
        return out;
    }

private:
    std::vector<Matrix> rewards_;
    std::size_t horizon_;
};

inline LaggedRewards build_lagged(const std::vector<Matrix>& rewards, std::size_t horizon) {
    return LaggedRewards(rewards, horizon);
}

/// Geometric kernel: entry (j, c) = (1 - alpha_j)^c alpha_j beta_j for
/// c = 0..cols-1. Powers are accumulated by repeated multiplication.
inline Matrix transform_F(const Vector& alpha, const Vector& beta, std::size_t cols) {
    if (alpha.size() != beta.size()) throw ShapeError("transform_F: alpha and beta lengths differ");
    if (cols < 1) throw DomainError("transform_F: need at least one column");
    Matrix g(alpha.size(), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < alpha.size(); ++j) {
        const double a = alpha(j);
        const double b = beta(j);
        if (!(a >= 0.0 && a <= 1.0)) throw DomainError("transform_F: alpha outside [0,1]");
        if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("transform_F: beta must be finite and >= 0");
        double v = a * b;
        for (Eigen::Index c = 0; c < g.cols(); ++c) {
            g(j, c) = v;
            v *= 1.0 - a;
        }
    }
    return g;
}

/// Kernel matrices for every signal of a parameter set.
inline std::vector<Matrix> transform_F(const RLParams& params, std::size_t cols) {
    std::vector<Matrix> out;
    out.reserve(params.signals());
    for (std::size_t i = 0; i < params.signals(); ++i) out.push_back(transform_F(params.alpha[i], params.beta[i], cols));
    return out;
}

namespace detail {

inline void check_kernels(const std::vector<Matrix>& G, const LaggedRewards& lagged, const Vector& w) {
    if (G.size() != lagged.signals())
        throw ShapeError("kernel: expected " + std::to_string(lagged.signals()) + " kernel matrices, got " +
                         std::to_string(G.size()));
    if (static_cast<std::size_t>(w.size()) != lagged.signals())
        throw ShapeError("kernel: weight vector length " + std::to_string(w.size()) + " != " +
                         std::to_string(lagged.signals()));
    for (const auto& g : G) {
        if (g.rows() != 1 && static_cast<std::size_t>(g.rows()) != lagged.arms())
            throw ShapeError("kernel: matrix has " + std::to_string(g.rows()) + " rows, expected 1 or " +
                             std::to_string(lagged.arms()));
        if (static_cast<std::size_t>(g.cols()) != lagged.horizon())
            throw ShapeError("kernel: matrix has " + std::to_string(g.cols()) + " columns, expected horizon " +
                             std::to_string(lagged.horizon()));
    }
}

}  // namespace detail

/// Subvalues z^(i)_j(t) = sum_r G^(i)_{j,r} u^(i)_j(t - r) and their weighted
/// sum x(t). Kernel matrices with a single row are broadcast over actions.
inline ValueTrace kernel_values(const std::vector<Matrix>& G, const LaggedRewards& lagged, const Vector& w) {
    detail::check_kernels(G, lagged, w);
    const auto n = static_cast<Eigen::Index>(lagged.steps());
    const auto m = static_cast<Eigen::Index>(lagged.arms());
    const auto L = static_cast<Eigen::Index>(lagged.horizon());
    ValueTrace out;
    out.x = Matrix::Zero(n, m);
    out.z.reserve(G.size());
    for (std::size_t i = 0; i < G.size(); ++i) {
        const auto& u = lagged.rewards(i);
        const auto& g = G[i];
        Matrix z = Matrix::Zero(n, m);
        for (Eigen::Index j = 0; j < m; ++j) {
            const Eigen::Index gj = g.rows() == 1 ? 0 : j;
            for (Eigen::Index t = 0; t < n; ++t) {
                double acc = 0.0;
                const Eigen::Index lags = std::min(L, t + 1);
                for (Eigen::Index r = 0; r < lags; ++r) acc += g(gj, r) * u(t - r, j);
                z(t, j) = acc;
            }
        }
        out.x += w(static_cast<Eigen::Index>(i)) * z;
        out.z.push_back(std::move(z));
    }
    return out;
}

/// Adjoint of the kernel map: given dx (n x m), returns d/dG^(i) with
/// entries w_i sum_t dx_j(t) u^(i)_j(t - r). `rows` is 1 (shared, summed
/// over actions) or m.
inline std::vector<Matrix> kernel_adjoint(const Matrix& dx, const LaggedRewards& lagged, const Vector& w,
                                          std::size_t rows) {
    const auto n = static_cast<Eigen::Index>(lagged.steps());
    const auto m = static_cast<Eigen::Index>(lagged.arms());
    const auto L = static_cast<Eigen::Index>(lagged.horizon());
    if (dx.rows() != n || dx.cols() != m) throw ShapeError("kernel_adjoint: dx has wrong shape");
    std::vector<Matrix> out;
    out.reserve(lagged.signals());
    for (std::size_t i = 0; i < lagged.signals(); ++i) {
        const auto& u = lagged.rewards(i);
        const double wi = w(static_cast<Eigen::Index>(i));
        Matrix g = Matrix::Zero(static_cast<Eigen::Index>(rows), L);
        for (Eigen::Index j = 0; j < m; ++j) {
            const Eigen::Index gj = rows == 1 ? 0 : j;
            for (Eigen::Index r = 0; r < L; ++r) {
                double acc = 0.0;
                for (Eigen::Index t = r; t < n; ++t) acc += dx(t, j) * u(t - r, j);
                g(gj, r) += wi * acc;
            }
        }
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace banditfit
