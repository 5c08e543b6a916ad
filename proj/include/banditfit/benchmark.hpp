#pragma once

#include "banditfit/core_model.hpp"
#include "banditfit/dloc.hpp"
#include "banditfit/metrics.hpp"
#include "banditfit/parallel.hpp"
#include "banditfit/recovery.hpp"
#include "banditfit/simulator.hpp"
#include "banditfit/surrogate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

namespace banditfit {

enum class Method { CVX, CVX_T, CVX_LOC, CVX_LOC_T, DLOC };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::CVX: return "CVX";
        case Method::CVX_T: return "CVX-T";
        case Method::CVX_LOC: return "CVX-LOC";
        case Method::CVX_LOC_T: return "CVX-LOC-T";
        case Method::DLOC: return "D-LOC";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    for (Method m : {Method::CVX, Method::CVX_T, Method::CVX_LOC, Method::CVX_LOC_T, Method::DLOC})
        if (s == to_string(m)) return m;
    throw DomainError("unknown method '" + s + "' (expected CVX, CVX-T, CVX-LOC, CVX-LOC-T or D-LOC)");
}

inline std::vector<Method> all_methods() {
    return {Method::CVX, Method::CVX_T, Method::CVX_LOC, Method::CVX_LOC_T, Method::DLOC};
}

/// Metrics of one method on one episode. Parameter errors are NaN for
/// methods that do not produce native parameters; `error` is set when the
/// fit failed.
struct FitReport {
    std::size_t episode = 0;
    Method method = Method::CVX;
    double mean_kl = std::numeric_limits<double>::quiet_NaN();
    double alpha_err = std::numeric_limits<double>::quiet_NaN();
    double beta_err = std::numeric_limits<double>::quiet_NaN();
    double nll = std::numeric_limits<double>::quiet_NaN();
    double J_lb = std::numeric_limits<double>::quiet_NaN();
    double gap = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

struct BenchmarkOptions {
    std::vector<Method> methods = all_methods();
    std::size_t truncated_horizon = 5;
    SolverOptions solver;
    /// Bound the first kernel column by the environment's beta_max.
    bool cap_first_lag = true;
    int recovery_restarts = 5;
    DlocOptions dloc;
    std::uint64_t seed = 0;
    /// Episode-level worker threads (0 = all cores).
    std::size_t jobs = 1;
};

struct MethodSummary {
    Method method = Method::CVX;
    Summary mean_kl, alpha_err, beta_err, nll, gap, wall_ms;
    std::size_t failures = 0;
};

struct BenchmarkResult {
    std::vector<FitReport> reports;
    std::vector<MethodSummary> table;
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace detail

/// Fits one simulated episode with every requested method.
///
/// The untruncated surrogate is always solved, since its optimum J_lb is the
/// lower bound every other method is judged against. Reported NLLs are the
/// native-model objective for parameter-producing methods and the surrogate
/// objective for CVX / CVX-T.
inline std::vector<FitReport> fit_episode(const EnvSpec& spec, const SimEpisode& sim, std::size_t episode_id,
                                          const BenchmarkOptions& opts) {
    std::vector<FitReport> out;
    if (opts.methods.empty()) return out;
    const ModelConfig cfg = model_config(spec);

    SolverOptions sopt = opts.solver;
    if (opts.cap_first_lag) {
        sopt.beta_cap.clear();
        for (const auto& b : spec.beta_box) sopt.beta_cap.push_back(b.hi);
    }
    RecoveryOptions ropt;
    ropt.restarts = opts.recovery_restarts;
    ropt.beta_box = spec.beta_box;
    ropt.seed = derive_seed(opts.seed, episode_id, 1);

    auto report = [&](Method m) {
        FitReport r;
        r.episode = episode_id;
        r.method = m;
        return r;
    };

    std::optional<SurrogateSolution> full;
    double full_ms = 0.0;
    std::string full_error;
    try {
        const auto t0 = std::chrono::steady_clock::now();
        full = solve_surrogate(SurrogateProblem::from_episode(sim.data, cfg, sopt));
        full_ms = detail::elapsed_ms(t0);
    } catch (const std::exception& e) {
        full_error = e.what();
    }
    const double J_lb = full ? full->J_lb : std::numeric_limits<double>::quiet_NaN();
    std::optional<SurrogateSolution> trunc;
    double trunc_ms = 0.0;

    auto finish_params = [&](FitReport& r, const RLParams& est) {
        const auto trace = value_recursion(est, sim.data.rewards, cfg);
        r.mean_kl = mean_kl(sim.true_pi, policy_trace(trace.x));
        std::tie(r.alpha_err, r.beta_err) = param_errors(sim.true_params, est);
        r.nll = -log_likelihood(trace.x, sim.data.actions);
    };

    for (Method m : opts.methods) {
        FitReport r = report(m);
        r.J_lb = J_lb;
        try {
            switch (m) {
                case Method::CVX:
                case Method::CVX_LOC: {
                    if (!full) throw NumericError(full_error);
                    if (m == Method::CVX) {
                        r.mean_kl = mean_kl(sim.true_pi, full->pi);
                        r.nll = full->J_lb;
                        r.wall_ms = full_ms;
                    } else {
                        const auto t0 = std::chrono::steady_clock::now();
                        const auto rec = recover_all(full->G, ropt);
                        r.wall_ms = full_ms + detail::elapsed_ms(t0);
                        finish_params(r, rec.params);
                    }
                    break;
                }
                case Method::CVX_T:
                case Method::CVX_LOC_T: {
                    if (!trunc) {
                        ModelConfig tcfg = cfg;
                        tcfg.horizon = std::min(opts.truncated_horizon, cfg.n);
                        const auto t0 = std::chrono::steady_clock::now();
                        trunc = solve_surrogate(SurrogateProblem::from_episode(sim.data, tcfg, sopt));
                        trunc_ms = detail::elapsed_ms(t0);
                    }
                    if (m == Method::CVX_T) {
                        r.wall_ms = trunc_ms;
                        r.mean_kl = mean_kl(sim.true_pi, trunc->pi);
                        r.nll = trunc->J_lb;
                    } else {
                        const auto t0 = std::chrono::steady_clock::now();
                        const auto rec = recover_all(trunc->G, ropt);
                        r.wall_ms = trunc_ms + detail::elapsed_ms(t0);
                        finish_params(r, rec.params);
                    }
                    break;
                }
                case Method::DLOC: {
                    DlocOptions dopt = opts.dloc;
                    dopt.seed = derive_seed(opts.seed, episode_id, 2);
                    dopt.jobs = 1;
                    const auto t0 = std::chrono::steady_clock::now();
                    const auto fit = fit_dloc(sim.data, cfg, dopt);
                    r.wall_ms = detail::elapsed_ms(t0);
                    finish_params(r, fit.params);
                    break;
                }
            }
            r.gap = r.nll - r.J_lb;
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        out.push_back(std::move(r));
    }
    return out;
}

/// Aggregates per-episode reports into median (25%-75%) summaries per method.
inline std::vector<MethodSummary> aggregate(const std::vector<FitReport>& reports, const std::vector<Method>& methods) {
    std::vector<MethodSummary> table;
    for (Method m : methods) {
        MethodSummary s;
        s.method = m;
        std::vector<double> kl, ae, be, nll, gap, ms;
        for (const auto& r : reports) {
            if (r.method != m) continue;
            if (!r.error.empty()) {
                ++s.failures;
                continue;
            }
            kl.push_back(r.mean_kl);
            ae.push_back(r.alpha_err);
            be.push_back(r.beta_err);
            nll.push_back(r.nll);
            gap.push_back(r.gap);
            ms.push_back(r.wall_ms);
        }
        s.mean_kl = summarize(kl);
        s.alpha_err = summarize(ae);
        s.beta_err = summarize(be);
        s.nll = summarize(nll);
        s.gap = summarize(gap);
        s.wall_ms = summarize(ms);
        table.push_back(s);
    }
    return table;
}

/// Runs every requested method on every episode of a dataset. Per-episode
/// failures are recorded in the reports rather than aborting the run.
inline BenchmarkResult run_benchmark(const Dataset& ds, const BenchmarkOptions& opts) {
    BenchmarkResult res;
    if (opts.methods.empty()) return res;
    std::vector<std::vector<FitReport>> per_episode(ds.episodes.size());
    parallel_for(ds.episodes.size(), opts.jobs,
                 [&](std::size_t e) { per_episode[e] = fit_episode(ds.spec, ds.episodes[e], e, opts); });
    for (auto& v : per_episode)
        for (auto& r : v) res.reports.push_back(std::move(r));
    res.table = aggregate(res.reports, opts.methods);
    return res;
}

inline void write_reports_csv(std::ostream& os, const std::vector<FitReport>& reports) {
    os << "episode_id,method,mean_kl,alpha_err,beta_err,nll,j_lb,gap,wall_ms\n";
    os.precision(10);
    for (const auto& r : reports) {
        os << r.episode << ',' << to_string(r.method) << ',' << r.mean_kl << ',' << r.alpha_err << ',' << r.beta_err
           << ',' << r.nll << ',' << r.J_lb << ',' << r.gap << ',' << r.wall_ms << '\n';
    }
}

}  // namespace banditfit
