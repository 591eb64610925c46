#include "oco/algorithm_model.hpp"

#include <cmath>
#include <sstream>

namespace oco::model {

void FunctionClass::validate() const {
    if (!(m > 0.0) || !(L >= m) || !std::isfinite(L)) {
        std::ostringstream os;
        os << "invalid function class: need 0 < m <= L, got m=" << m << " L=" << L;
        throw std::invalid_argument(os.str());
    }
}

FunctionClass FunctionClass::from_kappa_fixed_m(double kappa, double m) {
    FunctionClass fc{m, m * kappa};
    fc.validate();
    return fc;
}

FunctionClass FunctionClass::from_kappa_unit_sum(double kappa) {
    FunctionClass fc{2.0 / (1.0 + kappa), 2.0 * kappa / (1.0 + kappa)};
    fc.validate();
    return fc;
}

void AlgorithmRealization::check_shapes() const {
    const int n = n_xi();
    const int nu = channels();
    std::ostringstream os;
    if (p < 1) os << "p must be >= 1; ";
    if (q < 0) os << "q must be >= 0; ";
    if (d < 1) os << "d must be >= 1; ";
    if (n < 1 || A.cols() != n) os << "A must be square and non-empty; ";
    if (B.rows() != n || B.cols() != nu) os << "B must be n_xi x (p+q); ";
    if (C.rows() != nu || C.cols() != n) os << "C must be (p+q) x n_xi; ";
    if (D.rows() != nu || D.cols() != nu) os << "D must be (p+q) x (p+q); ";
    const std::string msg = os.str();
    if (!msg.empty()) throw std::invalid_argument("realization '" + name + "': " + msg);
}

std::string StructureReport::first_failure() const {
    if (!shapes_ok) return "shapes";
    if (!assumption1_ok) return "Assumption 1";
    if (assumption2_applicable && !assumption2_ok) return "Assumption 2";
    if (!observability_ok) return "observability";
    if (!readout_causal_ok) return "readout causality";
    return {};
}

FixedPointResult compute_fixed_point_map(AlgorithmRealization& r) {
    r.check_shapes();
    const int n = r.n_xi();
    const int nu = r.channels();
    Matrix lhs(n + nu, n);
    lhs << Matrix::Identity(n, n) - r.A, r.C;
    Matrix rhs = Matrix::Zero(n + nu, 1);
    rhs.bottomRows(nu).setOnes();
    FixedPointResult out;
    out.U = algebra::solve_linear_least_squares(lhs, rhs);
    out.residual = (lhs * out.U - rhs).norm();
    out.ok = out.residual <= kStructureTol;
    r.U = out.U;
    return out;
}

namespace {

// Angle between v and its projection onto ker M; 0 when v lies in the kernel.
double kernel_angle(const Matrix& m, const Vector& v) {
    const double scale = std::max(1.0, m.norm());
    const Vector mv = m * v;
    // |M v| / (|M| |v|) is the sine of the angle up to conditioning of M;
    // exact containment is what the proofs need (B u* = 0, D u* = 0).
    return std::asin(std::min(1.0, mv.norm() / (scale * v.norm())));
}

}  // namespace

StructureReport verify_structure(const AlgorithmRealization& r_in) {
    StructureReport rep;
    std::ostringstream det;
    AlgorithmRealization r = r_in;
    try {
        r.check_shapes();
    } catch (const std::exception& e) {
        rep.shapes_ok = false;
        rep.details = e.what();
        return rep;
    }
    const int n = r.n_xi();
    const int nu = r.channels();

    const FixedPointResult fp = compute_fixed_point_map(r);
    rep.assumption1_residual = fp.residual;
    rep.assumption1_ok = fp.ok;
    det << "Assumption 1 residual " << fp.residual << (fp.ok ? " (ok)" : " (violated)") << "; ";

    rep.assumption2_applicable = r.q >= 1;
    if (rep.assumption2_applicable) {
        Vector v(nu);
        v.head(r.p).setOnes();
        v.tail(r.q).setConstant(-1.0);
        rep.assumption2_angle_B = kernel_angle(r.B, v);
        rep.assumption2_angle_D = kernel_angle(r.D, v);
        rep.assumption2_ok =
            rep.assumption2_angle_B <= kStructureTol && rep.assumption2_angle_D <= kStructureTol;
        const Matrix kb = algebra::nullspace_basis(r.B, 1e-9);
        const Matrix kd = algebra::nullspace_basis(r.D, 1e-9);
        det << "Assumption 2 angles B=" << rep.assumption2_angle_B << " D=" << rep.assumption2_angle_D
            << " (dim ker B=" << kb.cols() << ", dim ker D=" << kd.cols() << ")"
            << (rep.assumption2_ok ? " (ok)" : " (violated)") << "; ";
    } else {
        det << "Assumption 2 not applicable (q=0); ";
    }

    Matrix obs(n, n);
    Matrix row = r.C.row(0);
    for (int k = 0; k < n; ++k) {
        obs.row(k) = row;
        row = row * r.A;
    }
    rep.observability_ok = algebra::numerical_rank(obs, 1e-10) == n;
    det << "(C1, A) " << (rep.observability_ok ? "observable" : "not observable") << "; ";

    rep.readout_causal_ok = r.D.row(0).cwiseAbs().maxCoeff() == 0.0;
    det << "first row of D " << (rep.readout_causal_ok ? "zero" : "nonzero");
    rep.details = det.str();
    return rep;
}

void require_structure(AlgorithmRealization& r) {
    const StructureReport rep = verify_structure(r);
    if (!rep.all_ok()) {
        throw StructureError(rep.first_failure(),
                             "realization '" + r.name + "' fails " + rep.first_failure() + ": " + rep.details);
    }
    compute_fixed_point_map(r);
}

// ---- zoo ---------------------------------------------------------------

double default_gd_step(const FunctionClass& fc) { return 2.0 / (fc.m + fc.L); }

AlgorithmRealization make_ogd(double alpha, bool constrained, int d) {
    return make_multistep_ogd(1, alpha, constrained, d);
}

AlgorithmRealization make_multistep_ogd(int K, double alpha, bool constrained, int d) {
    if (K < 1) throw std::invalid_argument("make_multistep_ogd: K must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("make_multistep_ogd: alpha must be > 0");
    AlgorithmRealization r;
    r.name = K == 1 ? "O-GD" : std::to_string(K) + "-step O-GD";
    r.p = K;
    r.q = constrained ? K : 0;
    r.d = d;
    const int nu = r.p + r.q;
    r.A = Matrix::Ones(1, 1);
    r.B = Matrix::Constant(1, nu, -alpha);
    r.C = Matrix::Ones(nu, 1);
    r.D = Matrix::Zero(nu, nu);
    // Inner points w_0 = x_t, w_k = w_{k-1} - alpha (delta_k + g_k).
    // Gradient k is taken at w_{k-1}; projection k produces w_k.
    for (int k = 1; k <= K; ++k) {
        for (int i = 1; i < k; ++i) {
            r.D(k - 1, i - 1) = -alpha;
            if (constrained) r.D(k - 1, K + i - 1) = -alpha;
        }
        if (constrained) {
            for (int i = 1; i <= k; ++i) {
                r.D(K + k - 1, i - 1) = -alpha;
                r.D(K + k - 1, K + i - 1) = -alpha;
            }
        }
    }
    return r;
}

namespace {

double nesterov_beta(const FunctionClass& fc) {
    const double sk = std::sqrt(fc.kappa());
    return (sk - 1.0) / (sk + 1.0);
}

}  // namespace

AlgorithmRealization make_onm(const FunctionClass& fc, int d, const MomentumTuning& t) {
    fc.validate();
    const double a = t.alpha.value_or(1.0 / fc.L);
    const double b = t.beta.value_or(nesterov_beta(fc));
    if (!(a > 0.0)) throw std::invalid_argument("make_onm: alpha must be > 0");
    if (b == 0.0) {
        // Without momentum x_{t-1} is unobservable; the method is O-GD.
        AlgorithmRealization r = make_ogd(a, t.constrained, d);
        r.name = "O-NM";
        return r;
    }
    AlgorithmRealization r;
    r.name = "O-NM";
    r.d = d;
    r.p = 1;
    r.q = t.constrained ? 1 : 0;
    r.A.resize(2, 2);
    r.A << 1.0 + b, -b, 1.0, 0.0;
    const Eigen::RowVector2d cy(1.0 + b, -b);
    if (t.constrained) {
        r.B.resize(2, 2);
        r.B << -a, -a, 0.0, 0.0;
        r.C.resize(2, 2);
        r.C << cy, cy;
        r.D.resize(2, 2);
        r.D << 0.0, 0.0, -a, -a;
    } else {
        r.B.resize(2, 1);
        r.B << -a, 0.0;
        r.C = cy;
        r.D = Matrix::Zero(1, 1);
    }
    return r;
}

AlgorithmRealization make_onm_split(const FunctionClass& fc, int d, const MomentumTuning& t) {
    fc.validate();
    const double a = t.alpha.value_or(1.0 / fc.L);
    const double b = t.beta.value_or(nesterov_beta(fc));
    AlgorithmRealization r;
    r.name = "O-NM (split)";
    r.d = d;
    r.p = 2;
    r.q = 0;
    if (b == 0.0) {
        r.A = Matrix::Ones(1, 1);
        r.B.resize(1, 2);
        r.B << 0.0, -a;
        r.C = Matrix::Ones(2, 1);
        r.D = Matrix::Zero(2, 2);
        return r;
    }
    r.A.resize(2, 2);
    r.A << 1.0 + b, -b, 1.0, 0.0;
    r.B.resize(2, 2);
    r.B << 0.0, -a, 0.0, 0.0;
    r.C.resize(2, 2);
    r.C << 1.0, 0.0, 1.0 + b, -b;
    r.D = Matrix::Zero(2, 2);
    return r;
}

AlgorithmRealization make_oagd(const FunctionClass& fc, int d, const CouplingTuning& t) {
    fc.validate();
    const double tau = t.tau.value_or(1.0 / (1.0 + std::sqrt(fc.kappa())));
    const double al = t.alpha.value_or(1.0 / std::sqrt(fc.m * fc.L));
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("make_oagd: tau must lie in (0,1)");
    if (!(al > 0.0)) throw std::invalid_argument("make_oagd: alpha must be > 0");
    const double am = al * fc.m;
    const double ap = al / (1.0 + am);
    const Eigen::RowVector2d cx(1.0 - tau, tau);
    const Eigen::RowVector2d cz = (Eigen::RowVector2d(0.0, 1.0) + am * cx) / (1.0 + am);

    AlgorithmRealization r;
    r.name = "O-AGD";
    r.d = d;
    r.p = 1;
    r.q = t.constrained ? 2 : 0;
    r.A.resize(2, 2);
    r.A << cx, cz;
    if (t.constrained) {
        // channels: grad at x, projection producing y+, projection producing z+
        r.B.resize(2, 3);
        r.B << -1.0 / fc.L, -1.0 / fc.L, 0.0, -ap, 0.0, -ap;
        r.C.resize(3, 2);
        r.C << cx, cx, cz;
        r.D.resize(3, 3);
        r.D << 0.0, 0.0, 0.0, -1.0 / fc.L, -1.0 / fc.L, 0.0, -ap, 0.0, -ap;
    } else {
        r.B.resize(2, 1);
        r.B << -1.0 / fc.L, -ap;
        r.C = cx;
        r.D = Matrix::Zero(1, 1);
    }
    return r;
}

const std::vector<std::string>& zoo_ids() {
    static const std::vector<std::string> ids{"ogd", "ogd2", "ogd10", "onm", "oagd"};
    return ids;
}

std::string zoo_label(const std::string& id) {
    if (id == "ogd") return "O-GD";
    if (id == "ogd2") return "2-step O-GD";
    if (id == "ogd10") return "10-step O-GD";
    if (id == "onm") return "O-NM";
    if (id == "oagd") return "O-AGD";
    throw std::invalid_argument("unknown algorithm id '" + id + "'");
}

AlgorithmRealization make_zoo(const std::string& id, const FunctionClass& fc, int d, bool constrained) {
    fc.validate();
    const double a = default_gd_step(fc);
    if (id == "ogd") return make_ogd(a, constrained, d);
    if (id == "ogd2") return make_multistep_ogd(2, a, constrained, d);
    if (id == "ogd10") return make_multistep_ogd(10, a, constrained, d);
    if (id == "onm") {
        MomentumTuning t;
        t.constrained = constrained;
        return make_onm(fc, d, t);
    }
    if (id == "oagd") {
        CouplingTuning t;
        t.constrained = constrained;
        return make_oagd(fc, d, t);
    }
    throw std::invalid_argument("unknown algorithm id '" + id + "'");
}

}  // namespace oco::model
