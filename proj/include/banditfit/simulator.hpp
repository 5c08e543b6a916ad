#pragma once

#include "banditfit/core_model.hpp"
#include "banditfit/parallel.hpp"
#include "banditfit/types.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace banditfit {

/// Environment setups: basic shared-parameter model, per-action parameters,
/// and per-action parameters with an extra action-repetition signal.
enum class Setup { BSC, IND, SUB };
enum class BanditSize { TwoArm, TenArm };

inline const char* to_string(Setup s) {
    switch (s) {
        case Setup::BSC: return "BSC";
        case Setup::IND: return "IND";
        case Setup::SUB: return "SUB";
    }
    return "?";
}

inline Setup parse_setup(const std::string& s) {
    if (s == "BSC") return Setup::BSC;
    if (s == "IND") return Setup::IND;
    if (s == "SUB") return Setup::SUB;
    throw DomainError("unknown setup '" + s + "' (expected BSC, IND or SUB)");
}

inline const char* to_string(BanditSize s) { return s == BanditSize::TwoArm ? "2AB" : "10AB"; }

inline BanditSize parse_size(const std::string& s) {
    if (s == "2AB") return BanditSize::TwoArm;
    if (s == "10AB") return BanditSize::TenArm;
    throw DomainError("unknown bandit size '" + s + "' (expected 2AB or 10AB)");
}

struct EnvSpec {
    Setup setup = Setup::BSC;
    std::size_t m = 2;
    std::size_t n = 200;
    std::vector<double> reward_probs{0.9, 0.1};
    /// Chance of permuting the reward probabilities after each trial.
    double shuffle_prob = 0.02;
    Interval alpha_box{0.0, 1.0};
    /// One sensitivity box per signal.
    std::vector<Interval> beta_box{{0.0, 5.0}};
    std::uint64_t seed = 0;

    std::size_t signals() const { return setup == Setup::SUB ? 2 : 1; }
    bool shared() const { return setup == Setup::BSC; }

    void validate() const {
        if (m < 1) throw DomainError("env spec: m must be >= 1");
        if (n < 1) throw DomainError("env spec: n must be >= 1");
        if (reward_probs.size() != m) throw ShapeError("env spec: reward_probs needs m entries");
        for (double p : reward_probs)
            if (!(p >= 0.0 && p <= 1.0)) throw DomainError("env spec: reward probability outside [0,1]");
        if (!(shuffle_prob >= 0.0 && shuffle_prob <= 1.0)) throw DomainError("env spec: shuffle_prob outside [0,1]");
        if (!(alpha_box.lo >= 0.0 && alpha_box.lo <= alpha_box.hi && alpha_box.hi <= 1.0))
            throw DomainError("env spec: alpha box must lie in [0,1]");
        if (beta_box.size() != signals()) throw ShapeError("env spec: beta_box needs one entry per signal");
        for (const auto& b : beta_box)
            if (!(b.lo >= 0.0 && b.lo <= b.hi && std::isfinite(b.hi)))
                throw DomainError("env spec: beta box must be finite with 0 <= lo <= hi");
    }

    /// Standard environments with the published reward schedules and
    /// parameter ranges.
    static EnvSpec preset(Setup setup, BanditSize size, std::size_t n = 200, std::uint64_t seed = 0) {
        EnvSpec s;
        s.setup = setup;
        s.n = n;
        s.seed = seed;
        if (size == BanditSize::TwoArm) {
            s.m = 2;
            s.reward_probs = {0.9, 0.1};
            s.shuffle_prob = 0.02;
            s.beta_box = {{0.0, 5.0}};
            if (setup == Setup::SUB) s.beta_box.push_back({0.0, 2.0});
        } else {
            s.m = 10;
            s.reward_probs = {0.30, 0.27, 0.95, 0.67, 0.69, 0.29, 0.42, 0.05, 0.73, 1.00};
            s.shuffle_prob = 0.0;
            s.beta_box = {{5.0, 10.0}};
            if (setup == Setup::SUB) s.beta_box.push_back({0.0, 5.0});
        }
        return s;
    }
};

/// Model configuration matching an environment (no truncation).
inline ModelConfig model_config(const EnvSpec& spec) {
    ModelConfig cfg;
    cfg.m = spec.m;
    cfg.n = spec.n;
    cfg.k = spec.signals();
    cfg.w = Vector::Ones(static_cast<Eigen::Index>(cfg.k));
    cfg.horizon = spec.n;
    cfg.shared = spec.shared();
    cfg.beta_box = spec.beta_box;
    return cfg;
}

/// One simulated episode with its ground truth.
struct SimEpisode {
    Episode data;
    RLParams true_params;
    Matrix true_x;
    Matrix true_pi;
    /// Reward probabilities in force at each trial (n x m).
    Matrix reward_prob_log;
};

/// Uniform draw from the environment's parameter boxes.
template <class Rng>
RLParams sample_params(const EnvSpec& spec, Rng& rng) {
    spec.validate();
    RLParams p;
    p.shared = spec.shared();
    const auto rows = static_cast<Eigen::Index>(p.shared ? 1 : spec.m);
    for (std::size_t i = 0; i < spec.signals(); ++i) {
        Vector a(rows), b(rows);
        for (Eigen::Index j = 0; j < rows; ++j) {
            a(j) = std::uniform_real_distribution<double>(spec.alpha_box.lo, spec.alpha_box.hi)(rng);
            b(j) = std::uniform_real_distribution<double>(spec.beta_box[i].lo, spec.beta_box[i].hi)(rng);
        }
        p.alpha.push_back(std::move(a));
        p.beta.push_back(std::move(b));
    }
    return p;
}

namespace detail {

template <class Rng>
int sample_action(const Vector& pi, Rng& rng) {
    const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    for (Eigen::Index j = 0; j + 1 < pi.size(); ++j) {
        acc += pi(j);
        if (r < acc) return static_cast<int>(j);
    }
    return static_cast<int>(pi.size() - 1);
}

}  // namespace detail

/// Simulates one session. The subject starts from x(0) = 0 and makes a first
/// choice from the uniform policy. At every step t = 1..n the previous choice
/// is rewarded with its current probability, producing u(t) (and, for SUB,
/// the repetition signal equal to the previous choice's one-hot vector); the
/// values are updated and the next choice a(t) is drawn from softmax(x(t)).
/// After each reward the probabilities are permuted with `shuffle_prob`.
template <class Rng>
SimEpisode run_episode(const EnvSpec& spec, const RLParams& params, Rng& rng) {
    spec.validate();
    const auto cfg = model_config(spec);
    check_params(params, cfg);
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto m = static_cast<Eigen::Index>(spec.m);
    const std::size_t k = spec.signals();

    SimEpisode ep;
    ep.true_params = params;
    ep.data.actions.resize(spec.n);
    ep.data.rewards.assign(k, Matrix::Zero(n, m));
    ep.true_x = Matrix::Zero(n, m);
    ep.true_pi = Matrix::Zero(n, m);
    ep.reward_prob_log = Matrix::Zero(n, m);

    std::vector<double> probs = spec.reward_probs;
    Matrix z = Matrix::Zero(static_cast<Eigen::Index>(k), m);
    int prev = detail::sample_action(Vector::Constant(m, 1.0 / static_cast<double>(m)), rng);
    for (Eigen::Index t = 0; t < n; ++t) {
        for (Eigen::Index j = 0; j < m; ++j) ep.reward_prob_log(t, j) = probs[static_cast<std::size_t>(j)];
        const bool rewarded = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < probs[static_cast<std::size_t>(prev)];
        if (rewarded) ep.data.rewards[0](t, prev) = 1.0;
        if (spec.setup == Setup::SUB) ep.data.rewards[1](t, prev) = 1.0;
        if (spec.shuffle_prob > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < spec.shuffle_prob)
            std::shuffle(probs.begin(), probs.end(), rng);

        // Same arithmetic as value_recursion so the stored trace matches it.
        for (std::size_t i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) {
                const double a = params.a(i, static_cast<std::size_t>(j));
                const double gain = a * params.b(i, static_cast<std::size_t>(j));
                z(static_cast<Eigen::Index>(i), j) = (1.0 - a) * z(static_cast<Eigen::Index>(i), j) +
                                                     gain * ep.data.rewards[i](t, j);
            }
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            double x = 0.0;
            for (std::size_t i = 0; i < k; ++i) x += cfg.w(static_cast<Eigen::Index>(i)) * z(static_cast<Eigen::Index>(i), j);
            ep.true_x(t, j) = x;
        }
        const Vector pi = policy(ep.true_x.row(t).transpose());
        ep.true_pi.row(t) = pi.transpose();
        prev = detail::sample_action(pi, rng);
        ep.data.actions[static_cast<std::size_t>(t)] = prev;
    }
    return ep;
}

struct Dataset {
    EnvSpec spec;
    std::vector<SimEpisode> episodes;
};

/// Simulates `count` episodes; episode e uses the RNG stream derived from
/// (spec.seed, e), so output is independent of `jobs`.
inline Dataset make_dataset(const EnvSpec& spec, std::size_t count, std::size_t jobs = 1) {
    spec.validate();
    if (count < 1) throw DomainError("make_dataset: episode count must be >= 1");
    Dataset ds;
    ds.spec = spec;
    ds.episodes.resize(count);
    parallel_for(count, jobs, [&](std::size_t e) {
        std::mt19937_64 rng(derive_seed(spec.seed, e));
        const auto params = sample_params(spec, rng);
        ds.episodes[e] = run_episode(spec, params, rng);
    });
    return ds;
}

}  // namespace banditfit
