#include "oco/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace oco::sim {

using algebra::kron;

// ---- Box -----------------------------------------------------------------

Box Box::cube(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("Box: need lo < hi");
    return Box{lo, hi};
}

bool Box::bounded() const { return std::isfinite(lo) && std::isfinite(hi); }

double Box::diameter(int d) const {
    if (!bounded()) return std::numeric_limits<double>::infinity();
    return (hi - lo) * std::sqrt(static_cast<double>(d));
}

Vector Box::clamp(const Vector& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

// ---- Rng -----------------------------------------------------------------

double Rng::uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vector Rng::unit_vector(int d) {
    Vector v(d);
    double n = 0.0;
    while (n < 1e-12) {
        for (int j = 0; j < d; ++j) v(j) = normal();
        n = v.norm();
    }
    return v / n;
}

// ---- scenario --------------------------------------------------------------

double QuadraticScenario::value(int t, const Vector& x) const {
    const Vector e = x - centers.at(t);
    return 0.5 * e.dot(h.cwiseProduct(e)) + offsets.at(t);
}

Vector QuadraticScenario::gradient(int t, const Vector& x) const { return h.cwiseProduct(x - centers.at(t)); }

Vector QuadraticScenario::minimizer(int t) const { return box.clamp(centers.at(t)); }

namespace {

// Reflect x into [lo, hi]; 1-Lipschitz and the identity on the interval.
double fold(double x, double lo, double hi) {
    const double w = hi - lo;
    double y = std::fmod(x - lo, 2.0 * w);
    if (y < 0.0) y += 2.0 * w;
    if (y > w) y = 2.0 * w - y;
    return lo + y;
}

}  // namespace

QuadraticScenario generate_scenario(std::uint64_t seed, int T, int d, const FunctionClass& fc, double drift,
                                    const Box& box, const ScenarioOptions& opt) {
    if (T < 1) throw std::invalid_argument("generate_scenario: T must be >= 1");
    if (d < 1) throw std::invalid_argument("generate_scenario: d must be >= 1");
    if (!(drift >= 0.0)) throw std::invalid_argument("generate_scenario: drift must be >= 0");
    if (!(box.lo < box.hi)) throw std::invalid_argument("generate_scenario: invalid box (lo >= hi)");
    fc.validate();

    QuadraticScenario sc;
    sc.seed = seed;
    sc.T = T;
    sc.d = d;
    sc.fc = fc;
    sc.drift = drift;
    sc.box = box;
    Rng rng(seed);

    // Diagonal spectrum spanning [m, L]; with d = 1 one end is picked.
    sc.h.resize(d);
    if (d == 1) {
        sc.h(0) = rng.uniform() < 0.5 ? fc.m : fc.L;
    } else {
        sc.h(0) = fc.m;
        sc.h(1) = fc.L;
        for (int j = 2; j < d; ++j) sc.h(j) = rng.uniform(fc.m, fc.L);
        for (int j = d - 1; j > 0; --j) {
            const int k = static_cast<int>(rng.uniform() * (j + 1));
            std::swap(sc.h(j), sc.h(std::min(k, j)));
        }
    }

    const bool bounded = box.bounded();
    Vector c(d);
    for (int j = 0; j < d; ++j) c(j) = bounded ? rng.uniform(box.lo, box.hi) : rng.uniform(-1.0, 1.0);
    double b = 0.0;
    sc.centers.reserve(T + 1);
    sc.offsets.reserve(T + 1);
    for (int t = 0; t <= T; ++t) {
        sc.centers.push_back(c);
        sc.offsets.push_back(b);
        const Vector step = drift * rng.uniform() * rng.unit_vector(d);
        c += step;
        if (bounded && opt.interior) {
            for (int j = 0; j < d; ++j) c(j) = fold(c(j), box.lo, box.hi);
        }
        b += opt.offset_scale * drift * rng.uniform(-1.0, 1.0);
    }

    if (opt.start_at_minimizer) {
        sc.x1 = sc.minimizer(0);
    } else {
        sc.x1.resize(d);
        for (int j = 0; j < d; ++j) {
            sc.x1(j) = bounded ? rng.uniform(box.lo, box.hi) : sc.centers[0](j) + rng.normal();
        }
    }
    return sc;
}

// ---- closed loop -------------------------------------------------------------

std::vector<int> channel_order(const AlgorithmRealization& r) {
    r.check_shapes();
    const int nu = r.channels();
    for (int k = 0; k < nu; ++k) {
        const double dkk = r.D(k, k);
        if (k < r.p && dkk != 0.0) {
            throw std::invalid_argument("implicit loop: gradient channel " + std::to_string(k) +
                                        " depends on its own output");
        }
        if (k >= r.p && !(dkk < 0.0)) {
            throw std::invalid_argument("cone channel " + std::to_string(k) +
                                        " has no negative self-scaling D_kk; cannot recover g");
        }
    }
    // Kahn's algorithm on the off-diagonal feedthrough graph, lowest index first.
    std::vector<int> indeg(nu, 0), order;
    for (int k = 0; k < nu; ++k) {
        for (int j = 0; j < nu; ++j) {
            if (j != k && r.D(k, j) != 0.0) ++indeg[k];
        }
    }
    std::vector<bool> done(nu, false);
    for (int round = 0; round < nu; ++round) {
        int pick = -1;
        for (int k = 0; k < nu && pick < 0; ++k) {
            if (!done[k] && indeg[k] == 0) pick = k;
        }
        if (pick < 0) {
            throw std::invalid_argument("implicit loop: feedthrough D couples channels cyclically");
        }
        done[pick] = true;
        order.push_back(pick);
        for (int k = 0; k < nu; ++k) {
            if (k != pick && r.D(k, pick) != 0.0) --indeg[k];
        }
    }
    return order;
}

OcoTrace run_algorithm(const AlgorithmRealization& r_in, const QuadraticScenario& sc) {
    AlgorithmRealization r = r_in;
    r.check_shapes();
    if (r.d != sc.d) throw std::invalid_argument("run_algorithm: realization d does not match the scenario");
    if (r.constrained() && !sc.box.bounded()) {
        throw std::invalid_argument("run_algorithm: constrained realization needs a bounded box");
    }
    if (r.U.size() == 0) {
        const model::FixedPointResult fp = model::compute_fixed_point_map(r);
        if (!fp.ok) throw std::invalid_argument("run_algorithm: realization has no fixed-point map");
    }
    const std::vector<int> order = channel_order(r);
    const int d = sc.d, n = r.n_xi(), nu = r.channels();
    const Matrix I = Matrix::Identity(d, d);
    const Matrix A = kron(r.A, I), B = kron(r.B, I);

    OcoTrace tr;
    tr.T = sc.T;
    tr.d = d;
    tr.p = r.p;
    tr.q = r.q;
    Vector xi = kron(r.U, I) * sc.x1;
    for (int t = 0; t < sc.T; ++t) {
        tr.xi.push_back(xi);
        std::vector<Vector> s(nu, Vector::Zero(d)), u(nu, Vector::Zero(d)), pre(nu, Vector::Zero(d));
        for (int k : order) {
            Vector y = Vector::Zero(d);
            for (int i = 0; i < n; ++i) y += r.C(k, i) * xi.segment(i * d, d);
            for (int j = 0; j < nu; ++j) {
                if (j != k && r.D(k, j) != 0.0) y += r.D(k, j) * u[j];
            }
            if (k < r.p) {
                s[k] = y;
                u[k] = sc.gradient(t, y);
            } else {
                // y - alpha g = z with z the projection of y
                const double alpha = -r.D(k, k);
                pre[k] = y;
                s[k] = sc.box.clamp(y);
                u[k] = (y - s[k]) / alpha;
            }
        }
        Vector uu(nu * d);
        for (int k = 0; k < nu; ++k) uu.segment(k * d, d) = u[k];
        xi = A * xi + B * uu;

        const Vector xs = sc.minimizer(t);
        tr.x.push_back(s[0]);
        tr.x_star.push_back(xs);
        tr.loss.push_back(sc.value(t, s[0]));
        tr.loss_star.push_back(sc.value(t, xs));
        tr.s.push_back(std::move(s));
        tr.u.push_back(std::move(u));
        tr.pre.push_back(std::move(pre));
    }
    tr.xi.push_back(xi);
    tr.x_star.push_back(sc.minimizer(sc.T));
    return tr;
}

double OcoTrace::max_cone_violation(const Box& box) const {
    double worst = 0.0;
    for (int t = 0; t < T; ++t) {
        for (int k = p; k < p + q; ++k) {
            const Vector& g = u[t][k];
            const Vector& z = s[t][k];
            double v = 0.0;
            for (int j = 0; j < d; ++j) {
                if (g(j) == 0.0) continue;
                const double lo = g(j) * (box.lo - z(j)), hi = g(j) * (box.hi - z(j));
                v += std::max(lo, hi);
            }
            worst = std::max(worst, v);
        }
    }
    return worst;
}

// ---- metrics -------------------------------------------------------------------

double step_variation(const QuadraticScenario& sc, int t, const Vector& lo, const Vector& hi) {
    const Vector& c0 = sc.centers.at(t);
    const Vector& c1 = sc.centers.at(t + 1);
    // f_t - f_{t+1} = a^T x + k
    double k = sc.offsets[t] - sc.offsets[t + 1];
    double vmax = 0.0, vmin = 0.0;
    for (int j = 0; j < sc.d; ++j) {
        const double a = sc.h(j) * (c1(j) - c0(j));
        k += 0.5 * sc.h(j) * (c0(j) * c0(j) - c1(j) * c1(j));
        if (a == 0.0) continue;
        const double e0 = a * lo(j), e1 = a * hi(j);
        vmax += std::max(e0, e1);
        vmin += std::min(e0, e1);
    }
    return std::max(std::abs(k + vmax), std::abs(k + vmin));
}

namespace {

struct Hull {
    Vector lo, hi;

    Hull(const Box& box, int d) : lo(Vector::Constant(d, box.lo)), hi(Vector::Constant(d, box.hi)) {
        if (!box.bounded()) {
            lo.setConstant(std::numeric_limits<double>::infinity());
            hi.setConstant(-std::numeric_limits<double>::infinity());
        }
    }
    void add(const Vector& x) {
        lo = lo.cwiseMin(x);
        hi = hi.cwiseMax(x);
    }
};

}  // namespace

RegularityMetrics regularity_metrics(const QuadraticScenario& sc, const OcoTrace& tr, const Matrix& U) {
    if (U.cols() != 1 || tr.xi.empty() || U.rows() * tr.d != tr.xi[0].size()) {
        throw std::invalid_argument("regularity_metrics: U must be the n_xi x 1 fixed-point map of the run");
    }
    RegularityMetrics mt;
    const int T = tr.T;
    mt.T = T;
    for (int t = 0; t < T; ++t) mt.regret += tr.loss[t] - tr.loss_star[t];

    const Vector box_lo = Vector::Constant(sc.d, sc.box.lo), box_hi = Vector::Constant(sc.d, sc.box.hi);
    const double unorm = U.norm();
    Hull hull(sc.box, sc.d);
    for (int t = 0; t < T; ++t) {
        for (const Vector& v : tr.s[t]) hull.add(v);
    }
    for (const Vector& v : tr.x_star) hull.add(v);

    for (int t = 0; t < T; ++t) {
        // Delta_t = (.)_t - (.)_{t+1}
        const double dx = (tr.x_star[t] - tr.x_star[t + 1]).norm();
        const double dg2 = sc.h.cwiseProduct(sc.centers[t + 1] - sc.centers[t]).squaredNorm();
        mt.sum_dxi += unorm * dx;
        mt.sum_dxi_sq += unorm * unorm * dx * dx;
        mt.bound_gradient_variation += dg2;
        mt.bound_function_variation += step_variation(sc, t, hull.lo, hull.hi);
        if (t + 1 < T) {
            // regularity measures over t = 2..T
            mt.path_length += dx;
            mt.path_length_sq += dx * dx;
            mt.max_dx = std::max(mt.max_dx, dx);
            mt.gradient_variation += dg2;
            mt.function_variation += step_variation(sc, t, box_lo, box_hi);
        }
    }
    return mt;
}

// ---- IQC sums ------------------------------------------------------------------

IqcSums empirical_iqc_sums(const AlgorithmRealization& r_in, const FunctionClass& fc, const QuadraticScenario& sc,
                           const OcoTrace& tr, iqc::Mode mode) {
    AlgorithmRealization r = r_in;
    if (r.U.size() == 0) model::compute_fixed_point_map(r);
    if (tr.p != r.p || tr.q != r.q || tr.d != sc.d) {
        throw std::invalid_argument("empirical_iqc_sums: trace does not match the realization");
    }
    const iqc::StackedFilter sf = iqc::stack_filters(r, fc, mode);
    const int d = sc.d, nu = r.channels(), n = r.n_xi(), T = tr.T;
    const Matrix I = Matrix::Identity(d, d);
    const Matrix A = kron(sf.A, I), B = kron(sf.B, I), C = kron(sf.C, I), D = kron(sf.D, I);
    const Vector CU = r.C * r.U;

    IqcSums out;
    std::vector<Matrix> M;
    for (const auto& b : sf.blocks) {
        out.kinds.push_back(b.kind);
        out.rhs_sensitivity.push_back(b.rhs_sensitivity);
        M.push_back(kron(b.M, I));
    }
    out.step.assign(sf.blocks.size(), std::vector<double>(T, 0.0));
    out.prefix.assign(sf.blocks.size(), std::vector<double>(T, 0.0));

    Vector zeta = Vector::Zero(sf.n_state() * d);
    Vector w = Vector::Zero(sf.signal_dim() * d);
    for (int t = 0; t < T; ++t) {
        w.setZero();
        for (int k = 0; k < nu; ++k) {
            w.segment((sf.col_y() + k) * d, d) = tr.s[t][k] - CU(k) * tr.x_star[t];
            w.segment((sf.col_u() + k) * d, d) = tr.u[t][k];
        }
        if (mode == iqc::Mode::Variational) {
            const Vector dx = tr.x_star[t] - tr.x_star[t + 1];
            for (int i = 0; i < n; ++i) w.segment((sf.col_dxi() + i) * d, d) = r.U(i, 0) * dx;
            // grad f_t - grad f_{t+1} does not depend on the point
            const Vector dd = sc.h.cwiseProduct(sc.centers[t + 1] - sc.centers[t]);
            for (int k = 0; k < r.p; ++k) w.segment((sf.col_ddelta() + k) * d, d) = dd;
        }
        const Vector psi = C * zeta + D * w;
        zeta = A * zeta + B * w;
        for (std::size_t b = 0; b < sf.blocks.size(); ++b) {
            const auto& blk = sf.blocks[b];
            const Vector pb = psi.segment(blk.output_offset * d, blk.output_dim * d);
            out.step[b][t] = pb.dot(M[b] * pb);
            out.prefix[b][t] = out.step[b][t] + (t > 0 ? out.prefix[b][t - 1] : 0.0);
        }
    }

    out.v_prefix.assign(T, 0.0);
    Hull hull(sc.box, d);
    hull.add(tr.x_star[0]);
    for (int t = 0; t < T; ++t) {
        for (const Vector& v : tr.s[t]) hull.add(v);
        hull.add(tr.x_star[t + 1]);
        double v = 0.0;
        for (int s = 0; s <= t; ++s) v += step_variation(sc, s, hull.lo, hull.hi);
        out.v_prefix[t] = v;
    }
    return out;
}

// ---- bound comparison -------------------------------------------------------------

double initial_norm(const cert::RegretCertificate& cert, const AlgorithmRealization& r_in, const OcoTrace& tr) {
    AlgorithmRealization r = r_in;
    if (r.U.size() == 0) model::compute_fixed_point_map(r);
    const int n = r.n_xi(), d = tr.d;
    if (cert.P.rows() < n) throw std::invalid_argument("initial_norm: certificate P is smaller than the state");
    const Matrix I = Matrix::Identity(d, d);
    const Vector e = tr.xi.at(0) - kron(r.U, I) * tr.x_star.at(0);
    return e.dot(kron(cert.P.topLeftCorner(n, n), I) * e);
}

SlackReport compare_bound(const AlgorithmRealization& r_in, const QuadraticScenario& sc, const OcoTrace& tr,
                          const RegularityMetrics& metrics, const cert::RegretCertificate& cert) {
    if (!cert.feasible) throw std::invalid_argument("compare_bound: certificate is not feasible");
    if (cert.p != r_in.p || cert.q != r_in.q || tr.p != r_in.p || tr.q != r_in.q) {
        throw std::invalid_argument("compare_bound: certificate, trace and realization disagree on channels");
    }
    AlgorithmRealization r = r_in;
    if (r.U.size() == 0) model::compute_fixed_point_map(r);
    SlackReport rep;
    rep.seed = sc.seed;
    rep.regret = metrics.regret;
    rep.init_norm = initial_norm(cert, r, tr);
    std::optional<double> diam;
    if (cert.mode == iqc::Mode::Pointwise) {
        if (!sc.box.bounded()) throw std::invalid_argument("compare_bound: pointwise bound needs a bounded box");
        diam = sc.box.diameter(sc.d) * r.U.norm();
    }
    rep.bound = cert::certified_bound_value(cert, metrics, rep.init_norm, diam);
    rep.slack = rep.bound - rep.regret;
    // rounding in the loss sums, not a bound failure
    rep.violated = rep.slack < -kSlackTolerance * (1.0 + std::abs(rep.regret) + std::abs(rep.bound));
    return rep;
}

void write_trace_csv(std::ostream& os, const OcoTrace& tr) {
    const int nu = tr.p + tr.q;
    os << "t";
    for (int j = 0; j < tr.d; ++j) os << ",x" << j;
    for (int j = 0; j < tr.d; ++j) os << ",xstar" << j;
    os << ",loss,loss_star";
    for (int k = 0; k < nu; ++k) {
        for (int j = 0; j < tr.d; ++j) os << ",s" << k << '_' << j;
        for (int j = 0; j < tr.d; ++j) os << ",u" << k << '_' << j;
    }
    os << '\n';
    const auto old = os.precision(17);
    for (int t = 0; t < tr.T; ++t) {
        os << t + 1;
        for (int j = 0; j < tr.d; ++j) os << ',' << tr.x[t](j);
        for (int j = 0; j < tr.d; ++j) os << ',' << tr.x_star[t](j);
        os << ',' << tr.loss[t] << ',' << tr.loss_star[t];
        for (int k = 0; k < nu; ++k) {
            for (int j = 0; j < tr.d; ++j) os << ',' << tr.s[t][k](j);
            for (int j = 0; j < tr.d; ++j) os << ',' << tr.u[t][k](j);
        }
        os << '\n';
    }
    os.precision(old);
}

}  // namespace oco::sim
