#pragma once

#include "banditfit/box_minimizer.hpp"
#include "banditfit/parallel.hpp"
#include "banditfit/types.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace banditfit {

enum class RecoveryMethod { DirectLS, LogLS };

struct RecoveryOptions {
    int restarts = 5;
    BoxMinOptions local{500, 1e-13, 1e-4};
    std::uint64_t seed = 0;
    /// Per-signal sensitivity boxes; alpha is always searched in [0, 1].
    std::vector<Interval> beta_box{{0.0, 5.0}};
    RecoveryMethod method = RecoveryMethod::DirectLS;
    /// Worker threads for row-level parallelism (0 = all cores).
    std::size_t jobs = 1;

    void validate() const {
        if (restarts < 1) throw DomainError("recovery options: restarts must be >= 1");
        for (const auto& b : beta_box)
            if (!(b.lo >= 0.0 && b.lo <= b.hi && std::isfinite(b.hi)))
                throw DomainError("recovery options: beta box must be finite with 0 <= lo <= hi");
    }
};

/// Best geometric fit (alpha, beta) to one kernel row.
struct RowFit {
    double alpha = 0.0;
    double beta = 0.0;
    double residual = 0.0;
    /// LogLS only: the row has entries many orders of magnitude below its
    /// peak, so the log-space fit is dominated by the tail.
    bool tail_dominated = false;
};

struct RecoveryResult {
    RLParams params;
    /// residuals[i](j): final least-squares residual of row j of signal i.
    std::vector<Vector> residuals;
    std::vector<std::vector<bool>> fits_exact;
};

/// Rows whose infinity norm is below this are mapped to (0, beta_min).
inline constexpr double kZeroRowTol = 1e-10;
inline constexpr double kExactFitTol = 1e-6;

/// ||f(a, b) - g||^2 with f_c = (1 - a)^c a b, and its gradient.
inline double geometric_residual(double a, double b, const Vector& g, double* da = nullptr, double* db = nullptr) {
    double r2 = 0.0;
    double ga = 0.0;
    double gb = 0.0;
    double pw = 1.0;       // (1 - a)^c
    double pw_prev = 0.0;  // (1 - a)^(c - 1), zero for c = 0
    for (Eigen::Index c = 0; c < g.size(); ++c) {
        const double h = pw * a;
        const double r = h * b - g(c);
        r2 += r * r;
        const double dh = pw - static_cast<double>(c) * a * pw_prev;
        ga += 2.0 * r * b * dh;
        gb += 2.0 * r * h;
        pw_prev = pw;
        pw *= 1.0 - a;
    }
    if (da) *da = ga;
    if (db) *db = gb;
    return r2;
}

namespace detail {

inline bool better_fit(const RowFit& cand, const RowFit& best) {
    if (!std::isfinite(best.residual)) return std::isfinite(cand.residual);
    const double tie = 1e-15 * (1.0 + best.residual);
    if (cand.residual < best.residual - tie) return true;
    if (cand.residual > best.residual + tie) return false;
    if (cand.alpha != best.alpha) return cand.alpha < best.alpha;
    return cand.beta < best.beta;
}

}  // namespace detail

/// Multistart local least-squares fit of a geometric row to `g_row`, with
/// alpha in [0, 1] and beta in `beta_box`. Starting points are drawn
/// uniformly from the box using `seed`.
inline RowFit recover_row(const Vector& g_row, const Interval& beta_box, const RecoveryOptions& opts, std::uint64_t seed) {
    if (!g_row.allFinite()) throw NumericError("recover_row: non-finite kernel row");
    if (g_row.size() == 0 || g_row.lpNorm<Eigen::Infinity>() < kZeroRowTol)
        return RowFit{0.0, beta_box.lo, g_row.squaredNorm(), false};

    const Vector lo = (Vector(2) << 0.0, beta_box.lo).finished();
    const Vector hi = (Vector(2) << 1.0, beta_box.hi).finished();
    auto fg = [&](const Vector& v, Vector& grad) {
        double da = 0.0;
        double db = 0.0;
        const double f = geometric_residual(v(0), v(1), g_row, &da, &db);
        grad(0) = da;
        grad(1) = db;
        return f;
    };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ua(0.0, 1.0);
    std::uniform_real_distribution<double> ub(beta_box.lo, beta_box.hi);
    RowFit best{0.0, 0.0, std::numeric_limits<double>::infinity(), false};
    for (int s = 0; s < opts.restarts; ++s) {
        const double a0 = ua(rng);
        const double b0 = ub(rng);
        const auto res = box_minimize(fg, (Vector(2) << a0, b0).finished(), lo, hi, opts.local);
        RowFit cand{res.x(0), res.x(1), res.f, false};
        if (detail::better_fit(cand, best)) best = cand;
    }
    return best;
}

/// Log-space alternative: least squares of log g against the affine model
/// c log(1 - alpha) + log(alpha beta), with the slope bounded by -eps.
/// Requires every entry of `g_row` to be strictly positive. The returned
/// residual is measured in the same squared-error metric as `recover_row`.
inline RowFit recover_row_logls(const Vector& g_row, const Interval& beta_box, double eps = 1e-8) {
    const auto L = g_row.size();
    if (L == 0) throw ShapeError("recover_row_logls: empty row");
    for (Eigen::Index c = 0; c < L; ++c)
        if (!(g_row(c) > 0.0) || !std::isfinite(g_row(c)))
            throw DomainError("recover_row_logls: entry " + std::to_string(c) + " is not strictly positive");

    const Vector s = g_row.array().log().matrix();
    double slope = -eps;
    double icept = s(0);
    if (L > 1) {
        // Normal equations for the (lag index, 1) design.
        double sc = 0.0, scc = 0.0, ss = 0.0, scs = 0.0;
        for (Eigen::Index c = 0; c < L; ++c) {
            const double cd = static_cast<double>(c);
            sc += cd;
            scc += cd * cd;
            ss += s(c);
            scs += cd * s(c);
        }
        const double Ld = static_cast<double>(L);
        const double det = Ld * scc - sc * sc;
        slope = (Ld * scs - sc * ss) / det;
        icept = (ss - slope * sc) / Ld;
        if (slope > -eps) {
            slope = -eps;
            icept = (ss - slope * sc) / Ld;
        }
    }
    RowFit fit;
    fit.alpha = -std::expm1(slope);
    fit.beta = beta_box.clamp(std::exp(icept) / fit.alpha);
    fit.residual = geometric_residual(fit.alpha, fit.beta, g_row);
    fit.tail_dominated = g_row.minCoeff() < 1e-8 * g_row.maxCoeff();
    return fit;
}

/// Recovers (alpha, beta) for every row of every kernel matrix. A kernel
/// with a single row yields shared parameters. Row r of signal i uses the
/// RNG stream derived from (seed, i, r), so the result does not depend on
/// the order or concurrency of row fits.
inline RecoveryResult recover_all(const std::vector<Matrix>& G, const RecoveryOptions& opts) {
    opts.validate();
    if (G.empty()) throw ShapeError("recover_all: no kernel matrices");
    if (opts.beta_box.size() != G.size())
        throw ShapeError("recover_all: need one beta box per signal (" + std::to_string(G.size()) + ")");
    const auto rows = G[0].rows();
    for (const auto& g : G)
        if (g.rows() != rows) throw ShapeError("recover_all: kernel matrices differ in row count");

    struct Job {
        std::size_t signal;
        Eigen::Index row;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < G.size(); ++i)
        for (Eigen::Index j = 0; j < rows; ++j) jobs.push_back({i, j});

    std::vector<RowFit> fits(jobs.size());
    parallel_for(jobs.size(), opts.jobs, [&](std::size_t q) {
        const auto& jb = jobs[q];
        const Vector row = G[jb.signal].row(jb.row).transpose();
        const auto& box = opts.beta_box[jb.signal];
        if (opts.method == RecoveryMethod::LogLS) {
            fits[q] = recover_row_logls(row, box);
        } else {
            fits[q] = recover_row(row, box, opts, derive_seed(opts.seed, jb.signal, static_cast<std::uint64_t>(jb.row)));
        }
    });

    RecoveryResult out;
    out.params.shared = rows == 1;
    for (std::size_t i = 0; i < G.size(); ++i) {
        out.params.alpha.emplace_back(rows);
        out.params.beta.emplace_back(rows);
        out.residuals.emplace_back(rows);
        out.fits_exact.emplace_back(static_cast<std::size_t>(rows));
    }
    for (std::size_t q = 0; q < jobs.size(); ++q) {
        const auto& jb = jobs[q];
        out.params.alpha[jb.signal](jb.row) = fits[q].alpha;
        out.params.beta[jb.signal](jb.row) = fits[q].beta;
        out.residuals[jb.signal](jb.row) = fits[q].residual;
        out.fits_exact[jb.signal][static_cast<std::size_t>(jb.row)] = fits[q].residual < kExactFitTol;
    }
    return out;
}

}  // namespace banditfit
