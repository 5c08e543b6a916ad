#pragma once

#include "banditfit/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace banditfit {

/// Value trajectory of an episode. Row t of `x` (n x m) is x(t+1); `z[i]`
/// holds the subvalue trajectory of signal i in the same layout.
struct ValueTrace {
    Matrix x;
    std::vector<Matrix> z;
};

/// Forward-simulates the forgetting Q-learning recursion
///   z(t) = (1 - alpha) z(t-1) + alpha beta u(t),  z(0) = 0,
/// per signal and action, and combines x(t) = sum_i w_i z^(i)(t).
inline ValueTrace value_recursion(const RLParams& params, const std::vector<Matrix>& rewards,
                                  const ModelConfig& cfg) {
    check_params(params, cfg);
    if (rewards.size() != cfg.k)
        throw ShapeError("value_recursion: expected " + std::to_string(cfg.k) + " reward signals, got " +
                         std::to_string(rewards.size()));
    const auto n = static_cast<Eigen::Index>(cfg.n);
    const auto m = static_cast<Eigen::Index>(cfg.m);
    for (const auto& u : rewards)
        if (u.rows() != n || u.cols() != m)
            throw ShapeError("value_recursion: reward matrix is " + std::to_string(u.rows()) + "x" +
                             std::to_string(u.cols()) + ", expected " + std::to_string(n) + "x" +
                             std::to_string(m));

    ValueTrace out;
    out.x = Matrix::Zero(n, m);
    out.z.reserve(cfg.k);
    for (std::size_t i = 0; i < cfg.k; ++i) {
        Matrix z(n, m);
        const auto& u = rewards[i];
        for (Eigen::Index j = 0; j < m; ++j) {
            const double a = params.a(i, static_cast<std::size_t>(j));
            const double gain = a * params.b(i, static_cast<std::size_t>(j));
            double prev = 0.0;
            for (Eigen::Index t = 0; t < n; ++t) {
                prev = (1.0 - a) * prev + gain * u(t, j);
                z(t, j) = prev;
            }
        }
        out.x += cfg.w(static_cast<Eigen::Index>(i)) * z;
        out.z.push_back(std::move(z));
    }
    return out;
}

/// log(sum(exp(x))) with max-subtraction.
template <class Derived>
double log_sum_exp(const Eigen::MatrixBase<Derived>& x) {
    const double mx = x.maxCoeff();
    return mx + std::log((x.array() - mx).exp().sum());
}

namespace detail {

/// Max-subtracted softmax of `in` into `out`, summing left to right so that
/// vectors and matrix rows give bit-identical results.
template <class In, class Out>
void softmax_into(const In& in, Out&& out) {
    const auto m = in.size();
    double mx = in(0);
    for (Eigen::Index j = 1; j < m; ++j) mx = std::max(mx, in(j));
    double s = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
        out(j) = std::exp(in(j) - mx);
        s += out(j);
    }
    for (Eigen::Index j = 0; j < m; ++j) out(j) /= s;
}

}  // namespace detail

/// Softmax choice probabilities for one value vector.
inline Vector policy(const Vector& x) {
    if (x.size() == 0) throw ShapeError("policy: empty value vector");
    if (!x.allFinite()) throw NumericError("policy: non-finite value vector");
    Vector pi(x.size());
    detail::softmax_into(x, pi);
    return pi;
}

/// Row-wise softmax of an n x m value trajectory.
inline Matrix policy_trace(const Matrix& x) {
    if (!x.allFinite()) throw NumericError("policy: non-finite value trajectory");
    Matrix pi(x.rows(), x.cols());
    for (Eigen::Index t = 0; t < x.rows(); ++t) detail::softmax_into(x.row(t), pi.row(t));
    return pi;
}

/// Log-likelihood sum_t (y(t)^T x(t) - logsumexp(x(t))) of one-hot choices
/// `y` under values `x` (both n x m).
inline double log_likelihood(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw ShapeError("log_likelihood: x is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                         " but y is " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
    const auto actions = from_one_hot(y);
    if (!x.allFinite()) throw NumericError("log_likelihood: non-finite values");
    double ll = 0.0;
    for (Eigen::Index t = 0; t < x.rows(); ++t)
        ll += x(t, actions[static_cast<std::size_t>(t)]) - log_sum_exp(x.row(t));
    return ll;
}

/// Same as above with choices given as action indices.
inline double log_likelihood(const Matrix& x, const std::vector<int>& actions) {
    if (static_cast<std::size_t>(x.rows()) != actions.size())
        throw ShapeError("log_likelihood: " + std::to_string(x.rows()) + " value rows but " +
                         std::to_string(actions.size()) + " actions");
    if (!x.allFinite()) throw NumericError("log_likelihood: non-finite values");
    double ll = 0.0;
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
        const int a = actions[static_cast<std::size_t>(t)];
        if (a < 0 || a >= x.cols()) throw ShapeError("log_likelihood: action out of range");
        ll += x(t, a) - log_sum_exp(x.row(t));
    }
    return ll;
}

/// Negative log-likelihood of an episode under native parameters.
inline double episode_nll(const RLParams& params, const Episode& ep, const ModelConfig& cfg) {
    return -log_likelihood(value_recursion(params, ep.rewards, cfg).x, ep.actions);
}

}  // namespace banditfit
