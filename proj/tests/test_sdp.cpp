#include "oco/sdp.hpp"
#include "support/sdp_examples.hpp"
#include "support/sdp_oracle.hpp"

#include <gtest/gtest.h>

using namespace oco;
using algebra::Matrix;
using algebra::Vector;
using namespace oco::sdp;

TEST(SdpAnalytic, KnownOptima) {
    for (const auto& e : oracle::analytic_sdps()) {
        const Solution s = solve(e.problem);
        ASSERT_TRUE(s.optimal()) << e.name;
        EXPECT_NEAR(s.y(e.var), e.expected, 1e-8) << e.name;
        EXPECT_NEAR(s.objective, e.expected, 1e-8) << e.name;
    }
}

TEST(SdpProblem, SymmetricVectorizationIsIsometric) {
    Problem p;
    const SymVar P = p.add_symmetric(3, "P");
    const Matrix a = (Matrix(3, 3) << 1, 2, 3, 2, 4, 5, 3, 5, 6).finished();
    const Matrix b = (Matrix(3, 3) << -1, 0.5, 2, 0.5, 1, -3, 2, -3, 0.25).finished();
    const Vector ya = p.pack(P, a, Vector::Zero(p.num_vars()));
    const Vector yb = p.pack(P, b, Vector::Zero(p.num_vars()));
    EXPECT_NEAR(ya.dot(yb), (a.cwiseProduct(b)).sum(), 1e-12);
    EXPECT_LE((p.unpack(P, ya) - a).norm(), 1e-14);
    EXPECT_EQ(P.index(0, 2), P.index(2, 0));
    EXPECT_THROW(P.index(0, 3), std::out_of_range);
}

TEST(SdpProblem, ConstraintMapIsAffine) {
    oracle::RandomSdp s = oracle::random_sdp(3);
    std::mt19937_64 g(1);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 10; ++trial) {
        Vector y1(3), y2(3);
        for (int i = 0; i < 3; ++i) {
            y1(i) = nd(g);
            y2(i) = nd(g);
        }
        const double th = 0.3;
        const Matrix lhs = s.problem.evaluate(0, th * y1 + (1 - th) * y2);
        const Matrix rhs = th * s.problem.evaluate(0, y1) + (1 - th) * s.problem.evaluate(0, y2);
        EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(SdpProblem, CongruenceMatchesDense) {
    Problem p;
    const SymVar P = p.add_symmetric(2, "P");
    const int b = p.add_block(3);
    const Matrix R = (Matrix(2, 3) << 1, 2, 0, -1, 0.5, 3).finished();
    p.add_congruence(b, P, R, -2.0);
    const Matrix Pv = (Matrix(2, 2) << 2, 0.3, 0.3, 1).finished();
    const Vector y = p.pack(P, Pv, Vector::Zero(p.num_vars()));
    EXPECT_LE((p.evaluate(b, y) - (-2.0 * R.transpose() * Pv * R)).norm(), 1e-12);
}

TEST(SdpProblem, RejectsBadInput) {
    Problem p;
    const int b = p.add_block(2);
    EXPECT_THROW(p.add_constant(b, Matrix::Identity(3, 3)), std::invalid_argument);
    EXPECT_THROW(p.add_constant(b, (Matrix(2, 2) << 0, 1, 0, 0).finished()), algebra::NotSymmetric);
    EXPECT_THROW(p.add_constant(5, Matrix::Identity(2, 2)), std::out_of_range);
    EXPECT_THROW(p.add_block(0), std::invalid_argument);
}

TEST(SdpSolve, WeakDualityAndDeterminism) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        oracle::RandomSdp s = oracle::random_sdp(seed);
        const Solution a = solve(s.problem);
        const Solution b = solve(s.problem);
        ASSERT_TRUE(a.optimal()) << seed;
        EXPECT_LE(a.dual_bound, a.objective + 1e-7);
        EXPECT_EQ(a.iterations, b.iterations);
        EXPECT_EQ(a.y, b.y);
        EXPECT_LE(a.primal_residual, 1e-7);
    }
}

TEST(SdpSolve, MatchesBruteForce) {
    for (std::uint64_t seed = 100; seed < 103; ++seed) {
        oracle::RandomSdp s = oracle::random_sdp(seed);
        const Solution sol = solve(s.problem);
        ASSERT_TRUE(sol.optimal());
        oracle::BruteForce bf(s);
        const double ref = bf.optimum();
        EXPECT_NEAR(sol.objective, ref, 1e-4 * std::max(1.0, std::abs(ref))) << seed;
    }
}

TEST(SdpCheck, ReportsPerturbation) {
    oracle::RandomSdp s = oracle::random_sdp(9);
    Solution sol = solve(s.problem);
    ASSERT_TRUE(sol.optimal());
    EXPECT_TRUE(check_solution(s.problem, sol).ok());
    // push the active box side or the LMI over the edge
    Vector y = sol.y;
    for (int i = 0; i < 3; ++i) y(i) += 1.0 * (s.c(i) > 0 ? -1.0 : 1.0);
    sol.y = y;
    const ResidualReport rep = check_solution(s.problem, sol);
    EXPECT_GT(rep.max_violation, 0.0);
    EXPECT_FALSE(rep.ok());
}

TEST(SdpInfeasible, MarginIsPositive) {
    // x <= -1 and x >= 1
    Problem p;
    const int x = p.add_free();
    const int b1 = p.add_block(1);
    p.add_constant(b1, Matrix::Constant(1, 1, 1.0));
    p.add_scalar_identity(b1, x, 1.0);
    const int b2 = p.add_block(1);
    p.add_constant(b2, Matrix::Constant(1, 1, 1.0));
    p.add_scalar_identity(b2, x, -1.0);
    const Solution s = solve(p);
    EXPECT_FALSE(s.optimal());
    const MarginResult m = feasibility_margin(p, {b1, b2});
    EXPECT_TRUE(m.solved);
    EXPECT_NEAR(m.margin, 1.0, 1e-6);
    const ResidualReport rep = check_solution(p, s);
    if (s.status == Status::Infeasible) {
        EXPECT_TRUE(rep.has_margin);
        EXPECT_NEAR(rep.margin, 1.0, 1e-6);
    }
}

TEST(SdpInfeasible, FeasibleProblemHasNonpositiveMargin) {
    oracle::RandomSdp s = oracle::random_sdp(4);
    const MarginResult m = feasibility_margin(s.problem, {0});
    EXPECT_TRUE(m.solved);
    EXPECT_LE(m.margin, kFeasibleMargin);
}
