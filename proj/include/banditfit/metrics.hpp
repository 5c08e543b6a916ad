#pragma once

#include "banditfit/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace banditfit {

/// Average over steps of KL(pi_gt(t) || pi_hat(t)); both n x m with rows on
/// the probability simplex.
inline double mean_kl(const Matrix& pi_gt, const Matrix& pi_hat) {
    if (pi_gt.rows() != pi_hat.rows() || pi_gt.cols() != pi_hat.cols())
        throw ShapeError("mean_kl: policy sequences differ in shape");
    if (pi_gt.rows() == 0) throw ShapeError("mean_kl: empty policy sequence");
    double total = 0.0;
    for (Eigen::Index t = 0; t < pi_gt.rows(); ++t) {
        for (Eigen::Index j = 0; j < pi_gt.cols(); ++j) {
            const double p = pi_gt(t, j);
            const double q = pi_hat(t, j);
            if (!(q > 0.0)) throw NumericError("mean_kl: zero probability in estimate at t=" + std::to_string(t + 1));
            if (p > 0.0) total += p * std::log(p / q);
        }
    }
    return std::max(0.0, total / static_cast<double>(pi_gt.rows()));
}

/// l2 norms of the differences of the concatenated alpha and beta vectors.
inline std::pair<double, double> param_errors(const RLParams& truth, const RLParams& est) {
    if (truth.signals() != est.signals()) throw ShapeError("param_errors: signal counts differ");
    double ea = 0.0;
    double eb = 0.0;
    for (std::size_t i = 0; i < truth.signals(); ++i) {
        if (truth.alpha[i].size() != est.alpha[i].size() || truth.beta[i].size() != est.beta[i].size())
            throw ShapeError("param_errors: parameter vectors differ in length for signal " + std::to_string(i));
        ea += (truth.alpha[i] - est.alpha[i]).squaredNorm();
        eb += (truth.beta[i] - est.beta[i]).squaredNorm();
    }
    return {std::sqrt(ea), std::sqrt(eb)};
}

/// Nearest-rank quantile (q in (0, 1]) of the finite entries of `values`;
/// NaN when there are none.
inline double nearest_rank(std::vector<double> values, double q) {
    values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }),
                 values.end());
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

/// Median with the interquartile range, as reported in result tables.
struct Summary {
    double median = std::numeric_limits<double>::quiet_NaN();
    double q25 = std::numeric_limits<double>::quiet_NaN();
    double q75 = std::numeric_limits<double>::quiet_NaN();
    std::size_t count = 0;
};

inline Summary summarize(const std::vector<double>& values) {
    Summary s;
    s.median = nearest_rank(values, 0.5);
    s.q25 = nearest_rank(values, 0.25);
    s.q75 = nearest_rank(values, 0.75);
    s.count = static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](double v) { return std::isfinite(v); }));
    return s;
}

}  // namespace banditfit
