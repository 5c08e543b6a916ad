#include "support.hpp"

#include <gtest/gtest.h>

using namespace bft;

TEST(LaggedRewards, RowsAreShiftedRewards) {
    Gen g(11);
    const Matrix u = g.mat(7, 3, -1.0, 1.0);
    const LaggedRewards full({u}, 7);
    const LaggedRewards trunc({u}, 4);
    for (std::size_t t = 0; t < 7; ++t) {
        const Matrix U = full.lag_matrix(0, t);
        ASSERT_EQ(U.rows(), 7);
        for (Eigen::Index r = 0; r < 7; ++r) {
            if (r <= static_cast<Eigen::Index>(t))
                EXPECT_EQ(U.row(r), u.row(static_cast<Eigen::Index>(t) - r));
            else
                EXPECT_EQ(U.row(r).cwiseAbs().sum(), 0.0);
        }
        EXPECT_EQ(trunc.lag_matrix(0, t), U.topRows(4));
    }
}

TEST(TransformF, DirectEvaluation) {
    const Matrix F = transform_F(Vector::Constant(1, 0.5), Vector::Constant(1, 1.0), 3);
    ASSERT_EQ(F.cols(), 3);
    EXPECT_EQ(F(0, 0), 0.5);
    EXPECT_EQ(F(0, 1), 0.25);
    EXPECT_EQ(F(0, 2), 0.125);
}

TEST(TransformF, RowsAreFeasible) {
    Gen g(12);
    for (int it = 0; it < 200; ++it) {
        const auto m = static_cast<Eigen::Index>(g.index(1, 10));
        const Matrix F = transform_F(g.vec(m, 0.0, 1.0), g.vec(m, 0.0, 10.0), g.index(1, 50));
        EXPECT_TRUE(rows_monotone_nonneg(F));
    }
}

TEST(KernelValues, MatchesRecursion) {
    Gen g(13);
    for (int it = 0; it < 100; ++it) {
        const auto cfg = g.config(g.index(2, 6), g.index(1, 60), g.index(1, 2), g.coin());
        const auto p = g.params(cfg);
        const auto ep = g.episode(cfg, g.coin());
        const auto rec = value_recursion(p, ep.rewards, cfg);
        const auto ker = kernel_values(transform_F(p, cfg.n), LaggedRewards(ep.rewards, cfg.n), cfg.w);
        EXPECT_LE((rec.x - ker.x).cwiseAbs().maxCoeff(), 1e-10);
        for (std::size_t i = 0; i < cfg.k; ++i) EXPECT_LE((rec.z[i] - ker.z[i]).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(KernelValues, FullHorizonTruncationIsIdentity) {
    Gen g(14);
    const auto cfg = g.config(3, 40, 2, false);
    const auto ep = g.episode(cfg, true);
    const auto G = g.kernels(cfg, cfg.n);
    const auto a = kernel_values(G, build_lagged(ep.rewards, cfg.n), cfg.w);
    const auto b = kernel_values(G, LaggedRewards(ep.rewards, cfg.n), cfg.w);
    EXPECT_EQ(a.x, b.x);
}

TEST(KernelValues, AdjointIsTranspose) {
    Gen g(15);
    for (int it = 0; it < 30; ++it) {
        const auto cfg = g.config(g.index(2, 5), g.index(2, 30), g.index(1, 2), g.coin());
        const std::size_t cols = g.index(1, cfg.n);
        const LaggedRewards lag(g.episode(cfg, true).rewards, cols);
        const auto G = g.kernels(cfg, cols);
        const Matrix dx = g.mat(static_cast<Eigen::Index>(cfg.n), static_cast<Eigen::Index>(cfg.m), -1.0, 1.0);
        const auto adj = kernel_adjoint(dx, lag, cfg.w, cfg.kernel_rows());
        const double lhs = (kernel_values(G, lag, cfg.w).x.array() * dx.array()).sum();
        double rhs = 0.0;
        for (std::size_t i = 0; i < cfg.k; ++i) rhs += (G[i].array() * adj[i].array()).sum();
        EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs)));
    }
}

TEST(KernelValues, ShapeErrors) {
    Gen g(16);
    const auto cfg = g.config(3, 10, 1, false);
    const LaggedRewards lag(g.episode(cfg).rewards, 10);
    EXPECT_THROW(kernel_values({Matrix::Zero(2, 10)}, lag, cfg.w), ShapeError);
    EXPECT_THROW(kernel_values({Matrix::Zero(3, 11)}, lag, cfg.w), ShapeError);
}
