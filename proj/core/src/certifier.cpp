#include "oco/certifier.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace oco::cert {

using algebra::kron;
using iqc::Mode;
using iqc::StackedFilter;

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Feasible: return "feasible";
        case Outcome::Infeasible: return "infeasible";
        case Outcome::SolverFailure: return "solver_failure";
    }
    return "?";
}

AugmentedPlant build_augmented_plant(const AlgorithmRealization& r, const StackedFilter& sf) {
    r.check_shapes();
    if (sf.mode != Mode::Variational) throw std::invalid_argument("build_augmented_plant: needs a variational filter");
    if (sf.p != r.p || sf.q != r.q || sf.n_xi != r.n_xi()) {
        throw std::invalid_argument("build_augmented_plant: filter does not match the realization");
    }
    const int n = r.n_xi(), nz = sf.n_state(), nu = r.channels(), p = r.p;
    const Matrix By = sf.B.middleCols(sf.col_y(), nu), Bu = sf.B.middleCols(sf.col_u(), nu);
    const Matrix Bx = sf.B.middleCols(sf.col_dxi(), n), Bd = sf.B.middleCols(sf.col_ddelta(), p);
    const Matrix Dy = sf.D.middleCols(sf.col_y(), nu), Du = sf.D.middleCols(sf.col_u(), nu);
    const Matrix Dx = sf.D.middleCols(sf.col_dxi(), n), Dd = sf.D.middleCols(sf.col_ddelta(), p);

    AugmentedPlant g;
    g.n_xi = n;
    g.n_zeta = nz;
    g.p = r.p;
    g.q = r.q;
    const int ne = n + nz;
    g.A_hat = Matrix::Zero(ne, ne);
    g.A_hat.topLeftCorner(n, n) = r.A;
    g.A_hat.bottomLeftCorner(nz, n) = By * r.C;
    g.A_hat.bottomRightCorner(nz, nz) = sf.A;
    g.B_hat_u.resize(ne, nu);
    g.B_hat_u << r.B, By * r.D + Bu;
    g.B_hat_dxi.resize(ne, n);
    g.B_hat_dxi << Matrix::Identity(n, n), Bx;
    g.B_hat_ddelta.resize(ne, p);
    g.B_hat_ddelta << Matrix::Zero(n, p), Bd;
    g.C_hat.resize(sf.output_dim(), ne);
    g.C_hat << Dy * r.C, sf.C;
    g.D_hat_u = Dy * r.D + Du;
    g.D_hat_dxi = Dx;
    g.D_hat_ddelta = Dd;
    return g;
}

namespace {

// Outer factors of the LMI at base dimension. The LMI is
//   R1^T P R1 - R0^T P R0 + sum_k lambda_k Rk^T Mk Rk + sum_k mu_k Qk^T M1 Qk
//   - gamma_dxi Ex^T Ex - gamma_ddelta Ed^T Ed + cross.
struct Factors {
    int N = 0;
    int n_state = 0;  // size of P
    Matrix R0, R1;
    std::vector<Matrix> Rk, Mk;
    std::vector<Matrix> Qk, Qm;
    Matrix Ex, Ed;
    Matrix cross;
};

Matrix cross_term(const AlgorithmRealization& r, int N, int u_col) {
    // 1/2 [[0, C1^T], [C1, 0]] pairing the state error with the first
    // gradient channel; its quadratic form is e_t^T delta_t.
    Matrix x = Matrix::Zero(N, N);
    const int n = r.n_xi();
    x.block(0, u_col, n, 1) = 0.5 * r.C.row(0).transpose();
    x.block(u_col, 0, 1, n) = 0.5 * r.C.row(0);
    return x;
}

// Rows of the pointwise filter output for channel block b, in columns
// (xi~ | anything | u) where xi~ starts at column 0 and u at u_col.
Matrix pointwise_rows(const AlgorithmRealization& r, const StackedFilter& sf, const iqc::ChannelBlock& b, int N,
                      int u_col) {
    const int nu = r.channels(), n = r.n_xi();
    const Matrix Dy = sf.D.block(b.output_offset, sf.col_y(), b.output_dim, nu);
    const Matrix Du = sf.D.block(b.output_offset, sf.col_u(), b.output_dim, nu);
    Matrix rows = Matrix::Zero(b.output_dim, N);
    rows.leftCols(n) = Dy * r.C;
    rows.middleCols(u_col, nu) = Dy * r.D + Du;
    return rows;
}

Factors pointwise_factors(const AlgorithmRealization& r, const FunctionClass& fc) {
    const StackedFilter sf = iqc::stack_filters(r, fc, Mode::Pointwise);
    Factors f;
    const int n = r.n_xi(), nu = r.channels();
    f.N = n + nu;
    f.n_state = n;
    f.R0 = Matrix::Zero(n, f.N);
    f.R0.leftCols(n).setIdentity();
    f.R1.resize(n, f.N);
    f.R1 << r.A, r.B;
    for (const auto& b : sf.blocks) {
        f.Rk.push_back(pointwise_rows(r, sf, b, f.N, n));
        f.Mk.push_back(b.M);
    }
    f.cross = cross_term(r, f.N, n);
    return f;
}

Factors variational_factors(const AugmentedPlant& g, const AlgorithmRealization& r, const FunctionClass& fc,
                            const VariationalOptions& opt) {
    const StackedFilter sf = iqc::stack_filters(r, fc, Mode::Variational);
    Factors f;
    const int ne = g.n_eta(), nu = g.p + g.q, n = g.n_xi, p = g.p;
    f.N = ne + nu + n + p;
    f.n_state = ne;
    f.R0 = Matrix::Zero(ne, f.N);
    f.R0.leftCols(ne).setIdentity();
    f.R1.resize(ne, f.N);
    f.R1 << g.A_hat, g.B_hat_u, g.B_hat_dxi, g.B_hat_ddelta;
    Matrix R2(g.C_hat.rows(), f.N);
    R2 << g.C_hat, g.D_hat_u, g.D_hat_dxi, g.D_hat_ddelta;
    for (const auto& b : sf.blocks) {
        f.Rk.push_back(R2.middleRows(b.output_offset, b.output_dim));
        f.Mk.push_back(b.M);
    }
    if (opt.companions) {
        const StackedFilter pw = iqc::stack_filters(r, fc, Mode::Pointwise);
        for (const auto& b : pw.blocks) {
            f.Qk.push_back(pointwise_rows(r, pw, b, f.N, ne));
            f.Qm.push_back(b.M);
        }
    }
    f.Ex = Matrix::Zero(n, f.N);
    f.Ex.middleCols(ne + nu, n).setIdentity();
    f.Ed = Matrix::Zero(p, f.N);
    f.Ed.middleCols(ne + nu + n, p).setIdentity();
    f.cross = cross_term(r, f.N, ne);
    return f;
}

ParametricLmi to_problem(const Factors& f, Mode mode) {
    ParametricLmi lmi;
    lmi.mode = mode;
    lmi.size = f.N;
    auto& pr = lmi.problem;
    lmi.P = pr.add_symmetric(f.n_state, "P");
    for (std::size_t k = 0; k < f.Rk.size(); ++k) lmi.lambda.push_back(pr.add_nonneg("lambda" + std::to_string(k)));
    for (std::size_t k = 0; k < f.Qk.size(); ++k) lmi.companion.push_back(pr.add_nonneg("mu" + std::to_string(k)));
    if (f.Ex.rows() > 0) lmi.gamma_dxi = pr.add_nonneg("gamma_dxi");
    if (f.Ed.rows() > 0) lmi.gamma_ddelta = pr.add_nonneg("gamma_ddelta");

    lmi.lmi_block = pr.add_block(f.N, "lmi");
    pr.add_constant(lmi.lmi_block, f.cross);
    pr.add_congruence(lmi.lmi_block, lmi.P, f.R1, 1.0);
    pr.add_congruence(lmi.lmi_block, lmi.P, f.R0, -1.0);
    for (std::size_t k = 0; k < f.Rk.size(); ++k) pr.add_scalar_term(lmi.lmi_block, lmi.lambda[k], f.Rk[k], f.Mk[k]);
    for (std::size_t k = 0; k < f.Qk.size(); ++k) {
        pr.add_scalar_term(lmi.lmi_block, lmi.companion[k], f.Qk[k], f.Qm[k]);
    }
    if (lmi.gamma_dxi >= 0) {
        pr.add_scalar_term(lmi.lmi_block, lmi.gamma_dxi, f.Ex, Matrix::Identity(f.Ex.rows(), f.Ex.rows()), -1.0);
    }
    if (lmi.gamma_ddelta >= 0) {
        pr.add_scalar_term(lmi.lmi_block, lmi.gamma_ddelta, f.Ed, Matrix::Identity(f.Ed.rows(), f.Ed.rows()), -1.0);
    }

    // eps I - P <= 0
    const int n = f.n_state;
    const int pos = pr.add_block(n, "P>=eps");
    pr.add_constant(pos, kEpsP * Matrix::Identity(n, n));
    pr.add_congruence(pos, lmi.P, Matrix::Identity(n, n), -1.0);
    return lmi;
}

}  // namespace

ParametricLmi build_pointwise_lmi(const AlgorithmRealization& r, const FunctionClass& fc) {
    r.check_shapes();
    fc.validate();
    ParametricLmi lmi = to_problem(pointwise_factors(r, fc), Mode::Pointwise);
    auto& pr = lmi.problem;
    // P - t I <= 0, minimize t
    lmi.t = pr.add_free("t");
    const int n = lmi.P.n;
    const int ub = pr.add_block(n, "P<=t");
    pr.add_congruence(ub, lmi.P, Matrix::Identity(n, n), 1.0);
    pr.add_scalar_identity(ub, lmi.t, -1.0);
    pr.set_objective(lmi.t, 1.0);
    return lmi;
}

ParametricLmi build_variational_lmi(const AugmentedPlant& plant, const AlgorithmRealization& r,
                                    const FunctionClass& fc, const VariationalOptions& opt) {
    r.check_shapes();
    fc.validate();
    if (opt.k1 < 0 || opt.k2 < 0 || opt.k3 < 0) throw std::invalid_argument("variational weights must be >= 0");
    if (plant.p != r.p || plant.q != r.q || plant.n_xi != r.n_xi()) {
        throw std::invalid_argument("build_variational_lmi: plant does not match the realization");
    }
    ParametricLmi lmi = to_problem(variational_factors(plant, r, fc, opt), Mode::Variational);
    auto& pr = lmi.problem;
    pr.set_objective(lmi.gamma_dxi, opt.k1);
    pr.set_objective(lmi.gamma_ddelta, opt.k2 * r.p);
    for (int k = 0; k < r.p; ++k) pr.set_objective(lmi.lambda[k], opt.k3 * (fc.L - fc.m));
    return lmi;
}

double feasibility_margin(const ParametricLmi& lmi, const sdp::Options& opt) {
    return sdp::feasibility_margin(lmi.problem, {lmi.lmi_block}, opt).margin;
}

namespace {

void fill_variables(const ParametricLmi& lmi, const AlgorithmRealization& r, const FunctionClass& fc,
                    const sdp::Vector& y, RegretCertificate& c) {
    c.P = lmi.problem.unpack(lmi.P, y);
    c.lambda_p.clear();
    c.lambda_q.clear();
    c.companion.clear();
    for (int k = 0; k < r.channels(); ++k) {
        (k < r.p ? c.lambda_p : c.lambda_q).push_back(y(lmi.lambda[k]));
    }
    for (int v : lmi.companion) c.companion.push_back(y(v));
    if (lmi.mode == Mode::Pointwise) {
        c.lam_max_P = y(lmi.t);
    } else {
        c.gamma_dxi = y(lmi.gamma_dxi);
        c.gamma_ddelta = y(lmi.gamma_ddelta);
        c.gamma1 = c.gamma_dxi;
        c.gamma2 = r.p * c.gamma_ddelta;
        double s = 0.0;
        for (double l : c.lambda_p) s += l;
        c.gamma3 = (fc.L - fc.m) * s;
    }
}

RegretCertificate run(const ParametricLmi& lmi, const AlgorithmRealization& r, const FunctionClass& fc,
                      const CertifyOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    RegretCertificate c;
    c.mode = lmi.mode;
    c.fc = fc;
    c.p = r.p;
    c.q = r.q;
    const sdp::Solution sol = sdp::solve(lmi.problem, opt.sdp);
    c.stats.iterations = sol.iterations;
    c.stats.status = sdp::to_string(sol.status);
    c.stats.primal_residual = sol.primal_residual;
    c.stats.gap = sol.gap;
    fill_variables(lmi, r, fc, sol.y, c);
    c.lmi_residual = algebra::max_eig(lmi.problem.evaluate(lmi.lmi_block, sol.y));

    // Any point satisfying the LMI is a valid certificate. When the optimum
    // is approached only as some multiplier grows without bound the solver
    // stalls short of its gap tolerance; such a point is still accepted if
    // it is feasible and within kInexactGap of optimal.
    const bool feasible_point = c.lmi_residual <= 1e-7 && algebra::min_eig(c.P) >= 1e-9;
    const bool inexact = !sol.optimal() && sol.gap <= kInexactGap;
    if (feasible_point && inexact) c.stats.status = "inexact";
    const bool ok = feasible_point && (sol.optimal() || inexact);
    if (ok) {
        c.outcome = Outcome::Feasible;
        c.feasible = true;
    } else {
        const sdp::MarginResult mr = sdp::feasibility_margin(lmi.problem, {lmi.lmi_block}, opt.sdp);
        c.stats.phase1_iterations = mr.solution.iterations;
        c.margin = mr.margin;
        c.outcome = mr.solved && mr.margin > sdp::kFeasibleMargin ? Outcome::Infeasible : Outcome::SolverFailure;
        c.feasible = false;
    }
    c.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return c;
}

}  // namespace

RegretCertificate certify_pointwise(const AlgorithmRealization& r_in, const FunctionClass& fc,
                                    const CertifyOptions& opt) {
    AlgorithmRealization r = r_in;
    model::require_structure(r);
    return run(build_pointwise_lmi(r, fc), r, fc, opt);
}

RegretCertificate certify_variational(const AlgorithmRealization& r_in, const FunctionClass& fc,
                                      const CertifyOptions& opt) {
    AlgorithmRealization r = r_in;
    model::require_structure(r);
    const StackedFilter sf = iqc::stack_filters(r, fc, Mode::Variational);
    const AugmentedPlant g = build_augmented_plant(r, sf);
    return run(build_variational_lmi(g, r, fc, opt.variational), r, fc, opt);
}

RegretCertificate certify(const AlgorithmRealization& r, const FunctionClass& fc, Mode mode,
                          const CertifyOptions& opt) {
    return mode == Mode::Pointwise ? certify_pointwise(r, fc, opt) : certify_variational(r, fc, opt);
}

Matrix assemble_lmi(const AlgorithmRealization& r, const FunctionClass& fc, const RegretCertificate& cert, int d,
                    const VariationalOptions& opt) {
    if (d < 1) throw std::invalid_argument("assemble_lmi: d must be >= 1");
    Factors f;
    if (cert.mode == Mode::Pointwise) {
        f = pointwise_factors(r, fc);
    } else {
        const StackedFilter sf = iqc::stack_filters(r, fc, Mode::Variational);
        f = variational_factors(build_augmented_plant(r, sf), r, fc, opt);
    }
    const Matrix I = Matrix::Identity(d, d);
    auto lift = [&](const Matrix& m) { return kron(m, I); };
    const Matrix P = lift(cert.P);
    const Matrix R0 = lift(f.R0), R1 = lift(f.R1);
    Matrix lmi = R1.transpose() * P * R1 - R0.transpose() * P * R0 + lift(f.cross);
    std::vector<double> lam = cert.lambda_p;
    lam.insert(lam.end(), cert.lambda_q.begin(), cert.lambda_q.end());
    if (lam.size() != f.Rk.size()) throw std::invalid_argument("assemble_lmi: certificate has wrong channel count");
    for (std::size_t k = 0; k < f.Rk.size(); ++k) {
        const Matrix Rk = lift(f.Rk[k]);
        lmi += lam[k] * Rk.transpose() * lift(f.Mk[k]) * Rk;
    }
    if (!f.Qk.empty() && cert.companion.size() != f.Qk.size()) {
        throw std::invalid_argument("assemble_lmi: certificate has wrong companion count");
    }
    for (std::size_t k = 0; k < f.Qk.size(); ++k) {
        const Matrix Qk = lift(f.Qk[k]);
        lmi += cert.companion[k] * Qk.transpose() * lift(f.Qm[k]) * Qk;
    }
    if (cert.mode == Mode::Variational) {
        const Matrix Ex = lift(f.Ex), Ed = lift(f.Ed);
        lmi -= cert.gamma_dxi * Ex.transpose() * Ex;
        lmi -= cert.gamma_ddelta * Ed.transpose() * Ed;
    }
    return algebra::symmetrize(lmi);
}

FullCheck verify_full_dimension(const AlgorithmRealization& r, const FunctionClass& fc,
                                const RegretCertificate& cert, int d, const VariationalOptions& opt) {
    FullCheck out;
    out.lmi_max_eig = algebra::max_eig(assemble_lmi(r, fc, cert, d, opt));
    out.p_min_eig = algebra::min_eig(kron(cert.P, Matrix::Identity(d, d)));
    return out;
}

double certified_bound_value(const RegretCertificate& cert, const RegularityMetrics& mt, double init_norm_P,
                             std::optional<double> diameter) {
    if (!cert.feasible) throw std::invalid_argument("certified_bound_value: certificate is not feasible");
    if (cert.mode == Mode::Pointwise) {
        if (!diameter || !std::isfinite(*diameter)) {
            throw std::invalid_argument("certified_bound_value: pointwise bound needs a bounded feasible set");
        }
        return init_norm_P + 3.0 * cert.lam_max_P * *diameter * mt.sum_dxi;
    }
    return init_norm_P + cert.gamma1 * mt.sum_dxi_sq + cert.gamma2 * mt.bound_gradient_variation +
           4.0 * cert.gamma3 * mt.bound_function_variation;
}

RegretCertificate corrupt_certificate(RegretCertificate cert) {
    cert.gamma1 *= 0.5;
    cert.gamma_dxi *= 0.5;
    return cert;
}

}  // namespace oco::cert
