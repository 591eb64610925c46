// Randomized checks of the IQCs on sampled operators and trajectories.
#include "oco/iqc.hpp"
#include "oco/simulator.hpp"
#include "support/iqc_checks.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace oco;
using algebra::Matrix;
using algebra::Vector;
using model::FunctionClass;

namespace {

// Runs a base (d = 1) filter over scalar inputs; returns the sum of forms.
double filter_sum(const iqc::FilterRealization& f, const std::vector<Vector>& w) {
    Vector zeta = Vector::Zero(f.n_state());
    double sum = 0.0;
    for (const Vector& wt : w) {
        const Vector psi = f.C * zeta + f.D * wt;
        sum += psi.dot(f.M * psi);
        zeta = f.A * zeta + f.B * wt;
    }
    return sum;
}

}  // namespace

TEST(SectorProperty, RandomQuadratics) {
    EXPECT_GE(oracle::worst_sector_sample(2024, 10000), -1e-9);
}

TEST(SectorProperty, MonotoneCone) {
    sim::Rng rng(7);
    const sim::Box box = sim::Box::cube(-1.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const int d = 1 + i % 3;
        Vector y(d), xs(d);
        for (int k = 0; k < d; ++k) {
            y(k) = rng.uniform(-2.0, 2.0);
            xs(k) = rng.uniform(-1.0, 1.0);
        }
        const Vector z = box.clamp(y);
        const Vector g = y - z;  // normal cone element at z
        EXPECT_GE(oracle::static_form(iqc::pointwise_cone_filter(), z - xs, g), -1e-12);
    }
}

TEST(VariationalProperty, PrefixSumsChargedToFunctionVariation) {
    EXPECT_GE(oracle::worst_variational_prefix(1000, 100), -1e-6);
}

TEST(VariationalProperty, StaticProblemsNeedNoVariation) {
    for (int i = 0; i < 20; ++i) {
        const FunctionClass fc = FunctionClass::from_kappa_fixed_m(1.0 + i, 2.0);
        const auto sc = sim::generate_scenario(i, 40, 2, fc, 0.0, sim::Box::cube(-1.0, 1.0));
        const auto r = model::make_zoo("ogd", fc, 2);
        const auto sums = sim::empirical_iqc_sums(r, fc, sc, sim::run_algorithm(r, sc), iqc::Mode::Variational);
        for (const auto& pre : sums.prefix) {
            for (double v : pre) EXPECT_GE(v, -1e-9);
        }
    }
}

TEST(VariationalProperty, PrintedMultiplierFailsOnStaticProblem) {
    // f = m/2 x^2 along O-GD: nothing moves, yet the printed weights go negative.
    const FunctionClass fc{2.0, 8.0};
    auto f = iqc::variational_gradient_filter(fc);
    f.M = iqc::m2_multiplier_printed();
    const double alpha = 2.0 / (fc.m + fc.L);
    std::vector<Vector> w;
    double x = 1.0;
    for (int t = 0; t < 30; ++t) {
        Vector wt(4);
        wt << x, fc.m * x, 0.0, 0.0;
        w.push_back(wt);
        x -= alpha * fc.m * x;
    }
    EXPECT_LT(filter_sum(f, w), -1e-3);
    EXPECT_GE(filter_sum(iqc::variational_gradient_filter(fc), w), -1e-12);
}

TEST(VariationalProperty, GradientFilterApproachesConeFilter) {
    // m -> 0, L -> inf: the gradient filter scaled by 2/L tends to the cone filter.
    const FunctionClass fc{1e-6, 1e6};
    const auto grad = iqc::variational_gradient_filter(fc);
    const auto cone = iqc::variational_cone_filter();
    sim::Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Vector> wg, wc;
        double xs = rng.uniform(-1.0, 1.0);
        for (int t = 0; t < 40; ++t) {
            const double y = rng.uniform(-2.0, 2.0);
            const double z = std::clamp(y, -1.0, 1.0);
            const double g = y - z;
            const double xs_next = std::clamp(xs + rng.uniform(-0.2, 0.2), -1.0, 1.0);
            Vector a(4), b(3);
            a << z - xs, g, xs - xs_next, 0.0;
            b << z - xs, g, xs - xs_next;
            wg.push_back(a);
            wc.push_back(b);
            xs = xs_next;
        }
        const double sc = filter_sum(cone, wc);
        const double sg = 2.0 / fc.L * filter_sum(grad, wg);
        EXPECT_LE(std::abs(sg - sc), 1e-3 * std::max(1.0, std::abs(sc)));
    }
}
