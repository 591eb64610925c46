#pragma once

#include "oco/algorithm_model.hpp"
#include "oco/iqc.hpp"
#include "oco/metrics.hpp"
#include "oco/sdp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace oco::cert {

using algebra::Matrix;
using model::AlgorithmRealization;
using model::FunctionClass;

// Algorithm in error coordinates stacked with the variational filters.
// State eta = (xi~, zeta); inputs u, dxi*, ddelta.
struct AugmentedPlant {
    Matrix A_hat, B_hat_u, B_hat_dxi, B_hat_ddelta;
    Matrix C_hat, D_hat_u, D_hat_dxi, D_hat_ddelta;
    int n_xi = 0, n_zeta = 0, p = 0, q = 0;

    int n_eta() const { return n_xi + n_zeta; }
};

AugmentedPlant build_augmented_plant(const AlgorithmRealization& r, const iqc::StackedFilter& sf);

// Lower bound on P's spectrum used in place of strict positivity.
inline constexpr double kEpsP = 1e-6;
// Relative gap accepted from a feasible point when the solver stalls.
inline constexpr double kInexactGap = 5e-2;

// Affine LMI in the certificate variables, packaged as an SDP.
struct ParametricLmi {
    iqc::Mode mode = iqc::Mode::Pointwise;
    sdp::Problem problem;
    int lmi_block = -1;
    int size = 0;  // base LMI dimension
    sdp::SymVar P;
    std::vector<int> lambda;     // one per channel (p then q)
    std::vector<int> companion;  // pointwise IQC weights used alongside the variational ones
    int t = -1;                  // epigraph variable, pointwise only
    int gamma_dxi = -1, gamma_ddelta = -1;
};

ParametricLmi build_pointwise_lmi(const AlgorithmRealization& r, const FunctionClass& fc);

struct VariationalOptions {
    double k1 = 1.0, k2 = 1.0, k3 = 1.0;
    // Add the pointwise sector/cone IQC of every channel with its own
    // weight. Without them the LMI has no finite optimum.
    bool companions = true;
};

ParametricLmi build_variational_lmi(const AugmentedPlant& plant, const AlgorithmRealization& r,
                                    const FunctionClass& fc, const VariationalOptions& opt = {});

enum class Outcome { Feasible, Infeasible, SolverFailure };
std::string to_string(Outcome o);

struct SolverStats {
    int iterations = 0;
    int phase1_iterations = 0;
    std::string status;
    double primal_residual = 0.0;
    double gap = 0.0;
    double seconds = 0.0;
};

struct RegretCertificate {
    iqc::Mode mode = iqc::Mode::Pointwise;
    Outcome outcome = Outcome::SolverFailure;
    bool feasible = false;
    FunctionClass fc;
    int p = 0, q = 0;

    Matrix P;  // base
    std::vector<double> lambda_p, lambda_q;
    std::vector<double> companion;
    double gamma_dxi = 0.0, gamma_ddelta = 0.0;

    double lam_max_P = 0.0;  // pointwise
    double gamma1 = 0.0, gamma2 = 0.0, gamma3 = 0.0;  // variational

    double lmi_residual = 0.0;  // max eigenvalue of the base LMI at the returned point
    double margin = 0.0;        // phase-1 margin, set when not feasible
    SolverStats stats;
};

struct CertifyOptions {
    sdp::Options sdp;
    VariationalOptions variational;
};

RegretCertificate certify_pointwise(const AlgorithmRealization& r, const FunctionClass& fc,
                                    const CertifyOptions& opt = {});
RegretCertificate certify_variational(const AlgorithmRealization& r, const FunctionClass& fc,
                                      const CertifyOptions& opt = {});
RegretCertificate certify(const AlgorithmRealization& r, const FunctionClass& fc, iqc::Mode mode,
                          const CertifyOptions& opt = {});

// Phase-1 margin of the LMI block (auxiliary constraints kept as they are).
double feasibility_margin(const ParametricLmi& lmi, const sdp::Options& opt = {});

// Dense LMI at dimension d, assembled directly from the realization and the
// filters with every matrix lifted by (x) I_d. Independent of the SDP data.
Matrix assemble_lmi(const AlgorithmRealization& r, const FunctionClass& fc, const RegretCertificate& cert,
                    int d, const VariationalOptions& opt = {});

// Max eigenvalue of assemble_lmi and the min eigenvalue of P (x) I_d.
struct FullCheck {
    double lmi_max_eig = 0.0;
    double p_min_eig = 0.0;
};
FullCheck verify_full_dimension(const AlgorithmRealization& r, const FunctionClass& fc,
                                const RegretCertificate& cert, int d, const VariationalOptions& opt = {});

// Finite-T right-hand side of the regret bound.
//   pointwise:   |xi~_1|_P^2 + 3 lam_max(P) R sum|dxi*|, R = state-space diameter
//   variational: |eta_1|_P^2 + gamma1 S + gamma2 G_T + 4 gamma3 V_T
// The factor 4 matches the variational IQC's right-hand side -4(L-m) V_T.
// Throws std::invalid_argument for pointwise mode without a diameter.
double certified_bound_value(const RegretCertificate& cert, const RegularityMetrics& metrics, double init_norm_P,
                             std::optional<double> diameter = std::nullopt);

// gamma1 halved, the corruption used by the mutation test.
RegretCertificate corrupt_certificate(RegretCertificate cert);

}  // namespace oco::cert
