#pragma once

#include "banditfit/types.hpp"

#include <limits>
#include <vector>

namespace banditfit {

namespace detail {

/// Antitonic pool-adjacent-violators with weights weight(c), then a clamp
/// of every pooled value to [0, cap]. Clamping the unconstrained solution is
/// exact for box bounds and keeps the ordering, so one pass suffices.
template <class Derived, class Weight>
void pava_clamp(Eigen::MatrixBase<Derived>& v, Weight weight, double cap) {
    const auto L = v.size();
    if (L == 0) return;
    // Blocks are (weighted sum, total weight, length); a block's value is
    // its weighted mean.
    std::vector<double> sum, wt;
    std::vector<Eigen::Index> len;
    sum.reserve(static_cast<std::size_t>(L));
    wt.reserve(static_cast<std::size_t>(L));
    len.reserve(static_cast<std::size_t>(L));
    for (Eigen::Index c = 0; c < L; ++c) {
        const double wc = weight(c);
        sum.push_back(wc * v(c));
        wt.push_back(wc);
        len.push_back(1);
        while (sum.size() > 1) {
            const auto b = sum.size() - 1;
            // Nonincreasing order is violated when the later block is larger.
            if (sum[b - 1] * wt[b] >= sum[b] * wt[b - 1]) break;
            sum[b - 1] += sum[b];
            wt[b - 1] += wt[b];
            len[b - 1] += len[b];
            sum.pop_back();
            wt.pop_back();
            len.pop_back();
        }
    }
    Eigen::Index pos = 0;
    for (std::size_t b = 0; b < sum.size(); ++b) {
        double mean = sum[b] / wt[b];
        if (mean < 0.0) mean = 0.0;
        if (mean > cap) mean = cap;
        for (Eigen::Index c = 0; c < len[b]; ++c) v(pos++) = mean;
    }
}

}  // namespace detail

/// Euclidean projection onto {v : cap >= v_1 >= v_2 >= ... >= v_L >= 0}.
/// Runs in O(L).
template <class Derived>
void project_monotone_nonneg_inplace(Eigen::MatrixBase<Derived>&& v,
                                     double cap = std::numeric_limits<double>::infinity()) {
    detail::pava_clamp(v, [](Eigen::Index) { return 1.0; }, cap);
}

/// Projection onto the same set in the norm sum_c w_c (v_c - y_c)^2, w > 0.
template <class Derived, class WDerived>
void project_monotone_nonneg_weighted_inplace(Eigen::MatrixBase<Derived>&& v, const Eigen::MatrixBase<WDerived>& w,
                                              double cap = std::numeric_limits<double>::infinity()) {
    detail::pava_clamp(v, [&](Eigen::Index c) { return w(c); }, cap);
}

template <class Derived>
void project_monotone_nonneg_inplace(Eigen::MatrixBase<Derived>& v,
                                     double cap = std::numeric_limits<double>::infinity()) {
    project_monotone_nonneg_inplace(std::move(v), cap);
}

inline Vector project_monotone_nonneg(const Vector& row, double cap = std::numeric_limits<double>::infinity()) {
    Vector out = row;
    project_monotone_nonneg_inplace(out, cap);
    return out;
}

/// Projects every row of a kernel matrix.
inline void project_kernel_rows(Matrix& g, double cap = std::numeric_limits<double>::infinity()) {
    for (Eigen::Index j = 0; j < g.rows(); ++j) project_monotone_nonneg_inplace(g.row(j), cap);
}

/// True when each row is nonincreasing and nonnegative within `tol`.
inline bool rows_monotone_nonneg(const Matrix& g, double tol = 0.0) {
    for (Eigen::Index j = 0; j < g.rows(); ++j) {
        for (Eigen::Index c = 0; c < g.cols(); ++c) {
            if (g(j, c) < -tol) return false;
            if (c + 1 < g.cols() && g(j, c + 1) > g(j, c) + tol) return false;
        }
    }
    return true;
}

}  // namespace banditfit
