#include "oco/certifier.hpp"

#include <gtest/gtest.h>

using namespace oco;
using algebra::Matrix;
using algebra::Vector;
using cert::Outcome;
using iqc::Mode;
using model::FunctionClass;

namespace {

FunctionClass cls(double kappa) { return FunctionClass::from_kappa_fixed_m(kappa, 2.0); }

}  // namespace

TEST(PointwiseLmi, SdpDataMatchesDirectAssembly) {
    // The SDP blocks and assemble_lmi are built independently; at the
    // solver's point both must give the same base LMI.
    for (const std::string id : {"ogd", "ogd2", "onm"}) {
        for (auto mode : {Mode::Pointwise, Mode::Variational}) {
            const FunctionClass fc = cls(3.0);
            const auto r = model::make_zoo(id, fc);
            const auto c = cert::certify(r, fc, mode);
            ASSERT_TRUE(c.feasible) << id;
            const Matrix direct = cert::assemble_lmi(r, fc, c, 1);
            EXPECT_NEAR(algebra::max_eig(direct), c.lmi_residual, 1e-9) << id;
            EXPECT_LE(algebra::max_eig(direct), 1e-7) << id;
        }
    }
}

TEST(PointwiseLmi, ZeroVariablesLeaveCrossTerm) {
    const auto r = model::make_ogd(0.25, true);
    const cert::ParametricLmi lmi = cert::build_pointwise_lmi(r, cls(4.0));
    const Matrix f = lmi.problem.evaluate(lmi.lmi_block, Vector::Zero(lmi.problem.num_vars()));
    EXPECT_NEAR(algebra::max_eig(f), 0.5, 1e-14);
    EXPECT_NEAR(algebra::min_eig(f), -0.5, 1e-14);
}

TEST(PointwiseLmi, TwoStepSize) {
    const auto r = model::make_multistep_ogd(2, 0.1, true);
    EXPECT_EQ(cert::build_pointwise_lmi(r, cls(2.0)).size, 5);
}

TEST(AugmentedPlant, StateCounts) {
    const FunctionClass fc = cls(3.0);
    const auto r = model::make_ogd(0.2, false);
    const auto g = cert::build_augmented_plant(r, iqc::stack_filters(r, fc, Mode::Variational));
    EXPECT_EQ(g.n_eta(), 5);
    const auto lmi = cert::build_variational_lmi(g, r, fc);
    EXPECT_EQ(lmi.size, 8);

    const auto ex = model::make_multistep_ogd(2, 0.2, true);
    EXPECT_EQ(cert::build_augmented_plant(ex, iqc::stack_filters(ex, fc, Mode::Variational)).n_eta(), 11);
    EXPECT_THROW(cert::build_augmented_plant(r, iqc::stack_filters(r, fc, Mode::Pointwise)), std::invalid_argument);
}

TEST(AugmentedPlant, ZeroInputResponse) {
    const FunctionClass fc = cls(3.0);
    const auto r = model::make_ogd(0.2, true);
    const auto g = cert::build_augmented_plant(r, iqc::stack_filters(r, fc, Mode::Variational));
    Vector eta = Vector::LinSpaced(g.n_eta(), -1.0, 1.0);
    const Vector next = g.A_hat * eta + g.B_hat_u * Vector::Zero(2) + g.B_hat_dxi * Vector::Zero(1) +
                        g.B_hat_ddelta * Vector::Zero(1);
    EXPECT_EQ(next, g.A_hat * eta);
}

TEST(VariationalLmi, GammasOnTheirOwnBlocks) {
    const FunctionClass fc = cls(3.0);
    const auto r = model::make_ogd(0.2, true);
    const auto g = cert::build_augmented_plant(r, iqc::stack_filters(r, fc, Mode::Variational));
    const auto lmi = cert::build_variational_lmi(g, r, fc);
    Vector y = Vector::Zero(lmi.problem.num_vars());
    y(lmi.gamma_dxi) = 1.0;
    const Matrix fx = lmi.problem.evaluate(lmi.lmi_block, y) -
                      lmi.problem.evaluate(lmi.lmi_block, Vector::Zero(lmi.problem.num_vars()));
    const int col = g.n_eta() + r.channels();
    EXPECT_NEAR(fx(col, col), -1.0, 1e-15);
    EXPECT_NEAR(fx.norm(), 1.0, 1e-15);
}

TEST(CertifyPointwise, OgdUnitKappa) {
    const auto r = model::make_zoo("ogd", cls(1.0));
    const auto c = cert::certify_pointwise(r, cls(1.0));
    ASSERT_TRUE(c.feasible);
    EXPECT_NEAR(c.lam_max_P, 2.0, 0.1);
    EXPECT_LE(c.lmi_residual, 1e-7);
    EXPECT_GE(algebra::min_eig(c.P), 1e-9);
    for (double l : c.lambda_p) EXPECT_GE(l, -1e-9);
    for (double l : c.lambda_q) EXPECT_GE(l, -1e-9);
}

TEST(CertifyPointwise, OgdClosedForm) {
    // (kappa + 1)^2 / 2 with m = 2 and the step 2 / (m + L)
    for (double k : {4.0, 10.0}) {
        const auto c = cert::certify_pointwise(model::make_zoo("ogd", cls(k)), cls(k));
        ASSERT_TRUE(c.feasible);
        EXPECT_NEAR(c.lam_max_P, (k + 1) * (k + 1) / 2, 1e-4 * k * k);
    }
}

TEST(CertifyPointwise, NesterovInfeasibleAtTen) {
    const auto c = cert::certify_pointwise(model::make_zoo("onm", cls(10.0)), cls(10.0));
    EXPECT_EQ(c.outcome, Outcome::Infeasible);
    EXPECT_FALSE(c.feasible);
    EXPECT_GT(c.margin, sdp::kFeasibleMargin);
}

TEST(CertifyPointwise, RejectsBrokenStructure) {
    auto r = model::make_ogd(0.1, true);
    r.A(0, 0) = 0.5;
    EXPECT_THROW(cert::certify_pointwise(r, cls(2.0)), model::StructureError);
}

TEST(FeasibilityMargin, FeasibleInstance) {
    const auto r = model::make_zoo("ogd", cls(4.0));
    EXPECT_LE(cert::feasibility_margin(cert::build_pointwise_lmi(r, cls(4.0))), 0.0);
}

TEST(CertifyVariational, GammaThreeVanishesAtUnitKappa) {
    for (const std::string id : {"ogd", "ogd2", "onm", "oagd"}) {
        const auto c = cert::certify_variational(model::make_zoo(id, cls(1.0)), cls(1.0));
        ASSERT_TRUE(c.feasible) << id;
        EXPECT_EQ(c.gamma3, 0.0) << id;
        EXPECT_GE(c.gamma1, 0.0);
        EXPECT_GE(c.gamma2, 0.0);
    }
}

TEST(CertifyVariational, OgdGammaOneWhenGradientVariationIsPriced) {
    cert::CertifyOptions opt;
    opt.variational.k2 = 100.0;
    const auto c = cert::certify_variational(model::make_zoo("ogd", cls(1.0)), cls(1.0), opt);
    ASSERT_TRUE(c.feasible);
    EXPECT_NEAR(c.gamma1, 2.0, 0.02);
}

TEST(CertifyVariational, FullDimensionCheck) {
    const FunctionClass fc = cls(4.0);
    const auto r = model::make_zoo("ogd2", fc, 2);
    const auto c = cert::certify_variational(r, fc);
    ASSERT_TRUE(c.feasible);
    const auto full = cert::verify_full_dimension(r, fc, c, 2);
    EXPECT_LE(full.lmi_max_eig, 1e-6);
    EXPECT_GT(full.p_min_eig, 0.0);
    EXPECT_NEAR(full.lmi_max_eig, c.lmi_residual, 1e-9);
}

TEST(CertifyVariational, NegativeWeightsRejected) {
    cert::CertifyOptions opt;
    opt.variational.k1 = -1.0;
    EXPECT_THROW(cert::certify_variational(model::make_zoo("ogd", cls(2.0)), cls(2.0), opt), std::invalid_argument);
}

TEST(BoundValue, Formulas) {
    cert::RegretCertificate c;
    c.feasible = true;
    c.mode = Mode::Variational;
    c.gamma1 = 2.0;
    c.gamma2 = 3.0;
    c.gamma3 = 5.0;
    RegularityMetrics mt;
    EXPECT_EQ(cert::certified_bound_value(c, mt, 1.5), 1.5);
    EXPECT_EQ(cert::certified_bound_value(c, mt, 0.0), 0.0);
    mt.sum_dxi_sq = 1.0;
    mt.bound_gradient_variation = 2.0;
    mt.bound_function_variation = 0.5;
    EXPECT_DOUBLE_EQ(cert::certified_bound_value(c, mt, 1.0), 1.0 + 2.0 + 6.0 + 4.0 * 5.0 * 0.5);

    c.mode = Mode::Pointwise;
    c.lam_max_P = 4.0;
    mt.sum_dxi = 0.25;
    EXPECT_THROW(cert::certified_bound_value(c, mt, 1.0), std::invalid_argument);
    EXPECT_DOUBLE_EQ(cert::certified_bound_value(c, mt, 1.0, 2.0), 1.0 + 3 * 4.0 * 2.0 * 0.25);

    c.feasible = false;
    EXPECT_THROW(cert::certified_bound_value(c, mt, 1.0, 2.0), std::invalid_argument);
}

TEST(BoundValue, CorruptionHalvesGammaOne) {
    cert::RegretCertificate c;
    c.gamma1 = c.gamma_dxi = 3.0;
    c.gamma2 = 1.0;
    const auto k = cert::corrupt_certificate(c);
    EXPECT_EQ(k.gamma1, 1.5);
    EXPECT_EQ(k.gamma_dxi, 1.5);
    EXPECT_EQ(k.gamma2, 1.0);
}
