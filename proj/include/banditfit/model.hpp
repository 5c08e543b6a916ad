#pragma once

#include "banditfit/core_model.hpp"
#include "banditfit/features.hpp"
#include "banditfit/recovery.hpp"
#include "banditfit/surrogate.hpp"
#include "banditfit/types.hpp"

#include <optional>
#include <vector>

namespace banditfit {

/// Predicted choice probabilities with the underlying (sub)value functions.
struct Prediction {
    Matrix pi;
    Matrix x;
    std::vector<Matrix> z;
};

/// Stateful front end: fit the relaxed problem, optionally recover native
/// parameters, then predict or score new data.
///
/// predict and score use the recovered parameters once `fit_param` has been
/// called, and the fitted kernels otherwise.
class RLFit {
public:
    /// `horizon` of 0 means "no truncation" (use the episode length).
    explicit RLFit(std::size_t horizon = 0, bool shared = false, SolverOptions solver = {})
        : horizon_(horizon), shared_(shared), solver_(std::move(solver)) {}

    /// Scalar weights are repeated once per signal.
    static Vector broadcast_weights(const std::vector<double>& w, std::size_t k) {
        if (w.size() == 1) return Vector::Constant(static_cast<Eigen::Index>(k), w[0]);
        if (w.size() != k) throw ShapeError("weights: expected 1 or " + std::to_string(k) + " entries");
        return Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    }

    ModelConfig config_for(const std::vector<Matrix>& rewards, const Vector& w) const {
        if (rewards.empty()) throw ShapeError("no reward signals");
        ModelConfig cfg;
        cfg.n = static_cast<std::size_t>(rewards[0].rows());
        cfg.m = static_cast<std::size_t>(rewards[0].cols());
        cfg.k = rewards.size();
        cfg.w = w;
        cfg.horizon = horizon_ == 0 ? cfg.n : horizon_;
        cfg.shared = shared_;
        cfg.beta_box.assign(cfg.k, Interval{0.0, std::numeric_limits<double>::infinity()});
        return cfg;
    }

    const SurrogateSolution& fit(const std::vector<Matrix>& rewards, const std::vector<int>& actions, const Vector& w) {
        const auto cfg = config_for(rewards, w);
        cfg.validate();
        const Episode ep{actions, rewards};
        solution_ = solve_surrogate(SurrogateProblem::from_episode(ep, cfg, solver_));
        params_.reset();
        return *solution_;
    }

    const RecoveryResult& fit_param(RecoveryOptions opts) {
        if (!solution_) throw DomainError("fit_param called before fit");
        params_ = recover_all(solution_->G, opts);
        return *params_;
    }

    Prediction predict(const std::vector<Matrix>& rewards, const Vector& w) const {
        Prediction out;
        if (params_) {
            const auto cfg = config_for(rewards, w);
            auto trace = value_recursion(params_->params, rewards, cfg);
            out.x = std::move(trace.x);
            out.z = std::move(trace.z);
        } else if (solution_) {
            const auto cols = static_cast<std::size_t>(solution_->G.at(0).cols());
            auto trace = kernel_values(solution_->G, LaggedRewards(rewards, cols), w);
            out.x = std::move(trace.x);
            out.z = std::move(trace.z);
        } else {
            throw DomainError("predict called before fit");
        }
        out.pi = policy_trace(out.x);
        return out;
    }

    /// Log-likelihood of the observed choices (negated fitting objective).
    double score(const std::vector<Matrix>& rewards, const std::vector<int>& actions, const Vector& w) const {
        return log_likelihood(predict(rewards, w).x, actions);
    }

    const std::optional<SurrogateSolution>& solution() const { return solution_; }
    const std::optional<RecoveryResult>& recovered() const { return params_; }

    void set_solution(SurrogateSolution s) {
        solution_ = std::move(s);
        params_.reset();
    }
    void set_params(RecoveryResult r) { params_ = std::move(r); }

private:
    std::size_t horizon_;
    bool shared_;
    SolverOptions solver_;
    std::optional<SurrogateSolution> solution_;
    std::optional<RecoveryResult> params_;
};

}  // namespace banditfit
