#include "oco/simulator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace oco;
using algebra::Matrix;
using algebra::Vector;
using model::FunctionClass;
using sim::Box;

namespace {

const FunctionClass kFc = FunctionClass::from_kappa_fixed_m(2.0, 2.0);  // m = 2, L = 4

model::AlgorithmRealization zoo(const std::string& id, int d = 1, bool constrained = true) {
    auto r = model::make_zoo(id, kFc, d, constrained);
    model::require_structure(r);
    return r;
}

// T = 3, d = 1, h = 2, minimizer jumps once from 0 to v.
sim::QuadraticScenario single_jump(double v) {
    sim::QuadraticScenario sc;
    sc.T = 3;
    sc.d = 1;
    sc.fc = kFc;
    sc.box = Box::cube(-1.0, 1.0);
    sc.h = Vector::Constant(1, 2.0);
    for (double c : {0.0, 0.0, v, v}) sc.centers.push_back(Vector::Constant(1, c));
    sc.offsets.assign(4, 0.0);
    sc.x1 = Vector::Constant(1, 0.3);
    return sc;
}

}  // namespace

TEST(Box, Basics) {
    EXPECT_THROW(Box::cube(1.0, 1.0), std::invalid_argument);
    EXPECT_FALSE(Box::unbounded().bounded());
    const Box b = Box::cube(-1.0, 1.0);
    EXPECT_TRUE(b.bounded());
    EXPECT_DOUBLE_EQ(b.diameter(4), 4.0);
    EXPECT_EQ(b.clamp(Vector::Constant(2, 3.0)), Vector::Constant(2, 1.0));
}

TEST(Rng, Ranges) {
    sim::Rng a(7), b(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_EQ(u, b.uniform());
    }
    EXPECT_NEAR(a.unit_vector(5).norm(), 1.0, 1e-15);
}

TEST(Scenario, Deterministic) {
    const auto s1 = sim::generate_scenario(3, 20, 2, kFc, 0.1, Box::cube(-1, 1));
    const auto s2 = sim::generate_scenario(3, 20, 2, kFc, 0.1, Box::cube(-1, 1));
    ASSERT_EQ(s1.centers.size(), 21u);
    for (size_t t = 0; t < s1.centers.size(); ++t) EXPECT_EQ(s1.centers[t], s2.centers[t]);
    EXPECT_EQ(s1.x1, s2.x1);
    EXPECT_EQ(s1.h, s2.h);
    const auto s3 = sim::generate_scenario(4, 20, 2, kFc, 0.1, Box::cube(-1, 1));
    EXPECT_NE(s1.centers[5], s3.centers[5]);
}

TEST(Scenario, CurvatureInClassAndCentersInside) {
    const auto sc = sim::generate_scenario(1, 50, 3, kFc, 0.3, Box::cube(-1, 1));
    EXPECT_GE(sc.h.minCoeff(), kFc.m);
    EXPECT_LE(sc.h.maxCoeff(), kFc.L);
    EXPECT_DOUBLE_EQ(sc.h.minCoeff(), kFc.m);
    EXPECT_DOUBLE_EQ(sc.h.maxCoeff(), kFc.L);
    for (size_t t = 0; t + 1 < sc.centers.size(); ++t) {
        EXPECT_LE(sc.centers[t].cwiseAbs().maxCoeff(), 1.0);
        EXPECT_LE((sc.centers[t] - sc.centers[t + 1]).norm(), 0.3 + 1e-12);
    }
}

TEST(Scenario, MinimizerIsProjection) {
    auto sc = single_jump(0.0);
    sc.centers[1] = Vector::Constant(1, 2.0);
    EXPECT_EQ(sc.minimizer(1)(0), 1.0);
    EXPECT_EQ(sc.minimizer(0)(0), 0.0);
    EXPECT_DOUBLE_EQ(sc.value(1, Vector::Constant(1, 1.0)), 1.0);
    EXPECT_DOUBLE_EQ(sc.gradient(1, Vector::Constant(1, 1.0))(0), -2.0);
}

TEST(Metrics, ZeroDriftHasNoVariation) {
    const auto sc = sim::generate_scenario(2, 30, 2, kFc, 0.0, Box::cube(-1, 1));
    const auto r = zoo("ogd", 2);
    const auto tr = sim::run_algorithm(r, sc);
    const auto mt = sim::regularity_metrics(sc, tr, r.U);
    EXPECT_EQ(mt.path_length, 0.0);
    EXPECT_EQ(mt.path_length_sq, 0.0);
    EXPECT_EQ(mt.gradient_variation, 0.0);
    EXPECT_EQ(mt.function_variation, 0.0);
    EXPECT_EQ(mt.bound_function_variation, 0.0);
    EXPECT_GE(mt.regret, 0.0);
}

TEST(Metrics, SingleJump) {
    const double v = 0.5;
    const auto sc = single_jump(v);
    const auto r = zoo("ogd");
    const auto tr = sim::run_algorithm(r, sc);
    const auto mt = sim::regularity_metrics(sc, tr, r.U);
    EXPECT_DOUBLE_EQ(mt.path_length, v);
    EXPECT_DOUBLE_EQ(mt.path_length_sq, v * v);
    EXPECT_DOUBLE_EQ(mt.max_dx, v);
    EXPECT_DOUBLE_EQ(mt.gradient_variation, 4.0 * v * v);
    // sup over [-1, 1] of |x^2 - (x - v)^2| = 2v + v^2
    EXPECT_DOUBLE_EQ(mt.function_variation, 2 * v + v * v);
    EXPECT_DOUBLE_EQ(mt.sum_dxi, v);
    EXPECT_LE(mt.path_length_sq, mt.path_length * mt.max_dx + 1e-15);
    EXPECT_THROW(sim::regularity_metrics(sc, tr, Matrix()), std::invalid_argument);
}

TEST(Metrics, StepVariationMatchesSampling) {
    const auto sc = sim::generate_scenario(9, 5, 2, kFc, 0.4, Box::cube(-1, 1));
    const Vector lo = Vector::Constant(2, -1.0), hi = Vector::Constant(2, 1.0);
    for (int t = 0; t < 5; ++t) {
        const double sup = sim::step_variation(sc, t, lo, hi);
        double best = 0.0;
        for (int i = 0; i <= 20; ++i) {
            for (int j = 0; j <= 20; ++j) {
                Vector x(2);
                x << -1.0 + 0.1 * i, -1.0 + 0.1 * j;
                best = std::max(best, std::abs(sc.value(t, x) - sc.value(t + 1, x)));
            }
        }
        EXPECT_NEAR(sup, best, 1e-12);
    }
}

TEST(Run, GradientDescentContracts) {
    const auto sc = sim::generate_scenario(5, 10, 1, kFc, 0.0, Box::unbounded());
    const auto r = zoo("ogd", 1, false);
    const auto tr = sim::run_algorithm(r, sc);
    const double c = sc.centers[0](0);
    for (int t = 0; t + 1 < 6; ++t) {
        const double e0 = tr.x[t](0) - c, e1 = tr.x[t + 1](0) - c;
        EXPECT_NEAR(e1 / e0, 1.0 - sc.h(0) / 3.0, 1e-12);  // alpha = 2/(m+L) = 1/3
    }
}

TEST(Run, StaticStartAtMinimizerHasNoRegret) {
    sim::ScenarioOptions opt;
    opt.start_at_minimizer = true;
    for (const std::string id : {"ogd", "ogd2", "onm", "oagd"}) {
        const auto sc = sim::generate_scenario(11, 25, 2, kFc, 0.0, Box::cube(-1, 1), opt);
        const auto r = zoo(id, 2);
        const auto tr = sim::run_algorithm(r, sc);
        const auto mt = sim::regularity_metrics(sc, tr, r.U);
        EXPECT_NEAR(mt.regret, 0.0, 1e-14) << id;
    }
}

TEST(Run, InteriorMinimizersLeaveConeIdle) {
    // gradient steps with alpha h <= 1 stay between x_t and c_t
    sim::ScenarioOptions opt;
    opt.start_at_minimizer = true;
    const auto sc = sim::generate_scenario(12, 50, 2, kFc, 0.1, Box::cube(-1, 1), opt);
    const auto r = zoo("ogd", 2);
    const auto tr = sim::run_algorithm(r, sc);
    for (int t = 0; t < sc.T; ++t) EXPECT_EQ(tr.u[t][1].norm(), 0.0);
}

TEST(Run, ProjectionAndConeOnBoundary) {
    sim::ScenarioOptions opt;
    opt.interior = false;
    const Box box = Box::cube(-0.5, 0.5);
    for (const std::string id : {"ogd", "ogd2", "onm", "oagd"}) {
        const auto sc = sim::generate_scenario(13, 80, 2, kFc, 0.3, box, opt);
        const auto r = zoo(id, 2);
        const auto tr = sim::run_algorithm(r, sc);
        EXPECT_LE(tr.max_cone_violation(box), 1e-10) << id;
        for (int t = 0; t < sc.T; ++t) {
            for (int k = r.p; k < r.channels(); ++k) {
                EXPECT_LE(tr.s[t][k].cwiseAbs().maxCoeff(), 0.5) << id;
            }
        }
    }
}

TEST(Run, RejectsMismatchedInput) {
    const auto sc = sim::generate_scenario(1, 5, 2, kFc, 0.1, Box::unbounded());
    EXPECT_THROW(sim::run_algorithm(zoo("ogd", 2), sc), std::invalid_argument);
    EXPECT_THROW(sim::run_algorithm(zoo("ogd", 3, false), sc), std::invalid_argument);
}

TEST(ChannelOrder, FollowsFeedthrough) {
    const auto r = model::make_multistep_ogd(3, 0.2, true);
    const auto order = sim::channel_order(r);
    ASSERT_EQ(static_cast<int>(order.size()), r.channels());
    auto broken = r;
    broken.D(0, 1) = 0.1;
    broken.D(1, 0) = 0.1;
    EXPECT_THROW(sim::channel_order(broken), std::invalid_argument);
}

TEST(IqcSums, StaticRunsAreNonnegative) {
    for (const std::string id : {"ogd", "ogd2", "onm"}) {
        const auto sc = sim::generate_scenario(21, 60, 2, kFc, 0.0, Box::cube(-1, 1));
        const auto r = zoo(id, 2);
        const auto tr = sim::run_algorithm(r, sc);
        for (auto mode : {iqc::Mode::Pointwise, iqc::Mode::Variational}) {
            const auto sums = sim::empirical_iqc_sums(r, kFc, sc, tr, mode);
            for (const auto& pre : sums.prefix) {
                for (double v : pre) EXPECT_GE(v, -1e-9) << id;
            }
            for (double v : sums.v_prefix) EXPECT_EQ(v, 0.0);
        }
    }
}

TEST(CompareBound, StaticRuns) {
    const auto r = zoo("ogd", 2);
    const auto cert = cert::certify_variational(r, kFc);
    ASSERT_TRUE(cert.feasible);

    sim::ScenarioOptions opt;
    opt.start_at_minimizer = true;
    auto sc = sim::generate_scenario(31, 40, 2, kFc, 0.0, Box::cube(-1, 1), opt);
    auto tr = sim::run_algorithm(r, sc);
    auto rep = sim::compare_bound(r, sc, tr, sim::regularity_metrics(sc, tr, r.U), cert);
    EXPECT_EQ(rep.init_norm, 0.0);
    EXPECT_NEAR(rep.bound, 0.0, 1e-14);
    EXPECT_NEAR(rep.slack, 0.0, 1e-12);
    EXPECT_FALSE(rep.violated) << rep.regret << ' ' << rep.bound;

    sc = sim::generate_scenario(31, 40, 2, kFc, 0.0, Box::cube(-1, 1));
    tr = sim::run_algorithm(r, sc);
    rep = sim::compare_bound(r, sc, tr, sim::regularity_metrics(sc, tr, r.U), cert);
    EXPECT_GT(rep.init_norm, 0.0);
    EXPECT_DOUBLE_EQ(rep.bound, rep.init_norm);
    EXPECT_GE(rep.slack, 0.0);
}

TEST(CompareBound, PointwiseNeedsBoundedBox) {
    const auto r = zoo("ogd", 2, false);
    const auto cert = cert::certify_pointwise(r, kFc);
    ASSERT_TRUE(cert.feasible);
    const auto sc = sim::generate_scenario(1, 10, 2, kFc, 0.1, Box::unbounded());
    const auto tr = sim::run_algorithm(r, sc);
    EXPECT_THROW(sim::compare_bound(r, sc, tr, sim::regularity_metrics(sc, tr, r.U), cert), std::invalid_argument);
}

TEST(TraceCsv, Header) {
    const auto sc = single_jump(0.2);
    const auto r = zoo("ogd");
    std::ostringstream os;
    sim::write_trace_csv(os, sim::run_algorithm(r, sc));
    const std::string s = os.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "t,x0,xstar0,loss,loss_star,s0_0,u0_0,s1_0,u1_0");
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
}
