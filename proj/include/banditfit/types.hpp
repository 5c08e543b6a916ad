#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace banditfit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base for all library errors. `code()` maps onto the CLI exit status.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what, int code)
        : std::runtime_error(what), kind_(std::move(kind)), code_(code) {}

    const std::string& kind() const noexcept { return kind_; }
    int code() const noexcept { return code_; }

private:
    std::string kind_;
    int code_;
};

/// Inconsistent dimensions between data, configuration and parameters.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error("shape", what, 3) {}
};

/// Parameters or options outside their admissible range.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error("domain", what, 3) {}
};

/// Non-finite values encountered during evaluation.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error("numeric", what, 4) {}
};

/// File access or schema problems.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io", what, 2) {}
};

/// Closed interval used for parameter boxes.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
    double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

/// Structural description of a forgetting Q-learning family model.
///
/// `m` actions, episodes of length `n`, `k` subreward signals combined by
/// weights `w`. `horizon` is the number of reward lags retained by the
/// surrogate (p in [1, n]); `shared` ties the parameters of each signal across
/// actions. `beta_box[i]` bounds the reward sensitivity of signal i.
struct ModelConfig {
    std::size_t m = 2;
    std::size_t n = 1;
    std::size_t k = 1;
    Vector w = Vector::Ones(1);
    std::size_t horizon = 1;
    bool shared = false;
    std::vector<Interval> beta_box{{0.0, 5.0}};

    void validate() const {
        if (m < 1) throw DomainError("model config: m must be >= 1");
        if (n < 1) throw DomainError("model config: n must be >= 1");
        if (k < 1) throw DomainError("model config: k must be >= 1");
        if (horizon < 1 || horizon > n)
            throw DomainError("model config: horizon " + std::to_string(horizon) +
                              " outside [1, " + std::to_string(n) + "]");
        if (static_cast<std::size_t>(w.size()) != k)
            throw ShapeError("model config: w has " + std::to_string(w.size()) +
                             " entries, expected k=" + std::to_string(k));
        if (!w.allFinite()) throw DomainError("model config: w must be finite");
        if (beta_box.size() != k)
            throw ShapeError("model config: beta_box has " + std::to_string(beta_box.size()) +
                             " entries, expected k=" + std::to_string(k));
        for (const auto& b : beta_box)
            if (!(b.lo <= b.hi) || b.lo < 0.0)
                throw DomainError("model config: beta box must satisfy 0 <= lo <= hi");
    }

    /// Rows per kernel matrix: 1 when parameters are tied across actions.
    std::size_t kernel_rows() const { return shared ? 1 : m; }
};

/// Native RL parameters: one (alpha, beta) vector pair per signal.
///
/// In shared mode every vector has length 1 and is broadcast over actions.
struct RLParams {
    std::vector<Vector> alpha;
    std::vector<Vector> beta;
    bool shared = false;

    std::size_t signals() const { return alpha.size(); }

    /// Value of alpha^(i)_j honouring the shared broadcast.
    double a(std::size_t i, std::size_t j) const { return alpha[i](shared ? 0 : j); }
    double b(std::size_t i, std::size_t j) const { return beta[i](shared ? 0 : j); }

    static RLParams uniform(std::size_t k, std::size_t m, bool shared, double a, double b) {
        RLParams p;
        p.shared = shared;
        const auto rows = static_cast<Eigen::Index>(shared ? 1 : m);
        for (std::size_t i = 0; i < k; ++i) {
            p.alpha.push_back(Vector::Constant(rows, a));
            p.beta.push_back(Vector::Constant(rows, b));
        }
        return p;
    }
};

/// Checks shapes against `cfg` and feasibility against [0,1] x [0, inf).
/// The beta box is not enforced here; callers that need it check separately.
inline void check_params(const RLParams& params, const ModelConfig& cfg) {
    if (params.alpha.size() != cfg.k || params.beta.size() != cfg.k)
        throw ShapeError("params: expected " + std::to_string(cfg.k) + " signals, got " +
                         std::to_string(params.alpha.size()));
    const auto rows = static_cast<Eigen::Index>(params.shared ? 1 : cfg.m);
    for (std::size_t i = 0; i < cfg.k; ++i) {
        if (params.alpha[i].size() != rows || params.beta[i].size() != rows)
            throw ShapeError("params: signal " + std::to_string(i) + " has wrong length");
        for (Eigen::Index j = 0; j < rows; ++j) {
            const double a = params.alpha[i](j);
            const double b = params.beta[i](j);
            if (!(a >= 0.0 && a <= 1.0))
                throw DomainError("params: alpha[" + std::to_string(i) + "][" + std::to_string(j) +
                                  "]=" + std::to_string(a) + " outside [0,1]");
            if (!(b >= 0.0) || !std::isfinite(b))
                throw DomainError("params: beta[" + std::to_string(i) + "][" + std::to_string(j) +
                                  "]=" + std::to_string(b) + " must be finite and >= 0");
        }
    }
}

/// Observed data for one session.
///
/// `actions[t]` is the 0-based choice at step t+1. `rewards[i]` is an n x m
/// matrix whose row t holds u^(i)(t+1), the signal seen before that choice.
struct Episode {
    std::vector<int> actions;
    std::vector<Matrix> rewards;

    std::size_t length() const { return actions.size(); }
    std::size_t arms() const { return rewards.empty() ? 0 : static_cast<std::size_t>(rewards[0].cols()); }
    std::size_t signals() const { return rewards.size(); }
};

/// One-hot action matrix (n x m) from action indices.
inline Matrix one_hot(const std::vector<int>& actions, std::size_t m) {
    Matrix y = Matrix::Zero(static_cast<Eigen::Index>(actions.size()), static_cast<Eigen::Index>(m));
    for (std::size_t t = 0; t < actions.size(); ++t) {
        if (actions[t] < 0 || static_cast<std::size_t>(actions[t]) >= m)
            throw ShapeError("action " + std::to_string(actions[t]) + " at t=" + std::to_string(t + 1) +
                             " outside [0, " + std::to_string(m) + ")");
        y(static_cast<Eigen::Index>(t), actions[t]) = 1.0;
    }
    return y;
}

/// Inverse of one_hot; throws unless every row is a standard basis vector.
inline std::vector<int> from_one_hot(const Matrix& y) {
    std::vector<int> out(static_cast<std::size_t>(y.rows()));
    for (Eigen::Index t = 0; t < y.rows(); ++t) {
        int hot = -1;
        for (Eigen::Index j = 0; j < y.cols(); ++j) {
            const double v = y(t, j);
            if (v == 1.0 && hot < 0) {
                hot = static_cast<int>(j);
            } else if (v != 0.0) {
                throw ShapeError("row " + std::to_string(t + 1) + " is not one-hot");
            }
        }
        if (hot < 0) throw ShapeError("row " + std::to_string(t + 1) + " is not one-hot");
        out[static_cast<std::size_t>(t)] = hot;
    }
    return out;
}

/// Validates episode shapes against the configuration.
inline void check_episode(const Episode& ep, const ModelConfig& cfg) {
    if (ep.rewards.size() != cfg.k)
        throw ShapeError("episode: expected " + std::to_string(cfg.k) + " reward signals, got " +
                         std::to_string(ep.rewards.size()));
    if (ep.actions.size() != cfg.n)
        throw ShapeError("episode: expected " + std::to_string(cfg.n) + " actions, got " +
                         std::to_string(ep.actions.size()));
    for (std::size_t i = 0; i < cfg.k; ++i) {
        const auto& u = ep.rewards[i];
        if (static_cast<std::size_t>(u.rows()) != cfg.n || static_cast<std::size_t>(u.cols()) != cfg.m)
            throw ShapeError("episode: reward signal " + std::to_string(i) + " is " +
                             std::to_string(u.rows()) + "x" + std::to_string(u.cols()) + ", expected " +
                             std::to_string(cfg.n) + "x" + std::to_string(cfg.m));
        if (!u.allFinite()) throw NumericError("episode: reward signal " + std::to_string(i) + " not finite");
    }
    for (std::size_t t = 0; t < ep.actions.size(); ++t)
        if (ep.actions[t] < 0 || static_cast<std::size_t>(ep.actions[t]) >= cfg.m)
            throw ShapeError("episode: action " + std::to_string(ep.actions[t]) + " at t=" +
                             std::to_string(t + 1) + " outside [0, " + std::to_string(cfg.m) + ")");
}

}  // namespace banditfit
