#include "oco/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace oco::sdp {

namespace {
constexpr double kSqrt2 = 1.41421356237309504880;
}

int SymVar::index(int k, int l) const {
    if (k > l) std::swap(k, l);
    if (k < 0 || l >= n) throw std::out_of_range("SymVar::index");
    return offset + k * n - k * (k - 1) / 2 + (l - k);
}

std::string to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::MaxIter: return "max_iter";
        case Status::NumericalError: return "numerical_error";
    }
    return "?";
}

// ---- problem assembly ----------------------------------------------------

int Problem::new_var(VarKind k, const std::string& name) {
    kinds_.push_back(k);
    names_.push_back(name);
    c_.conservativeResize(static_cast<Eigen::Index>(kinds_.size()));
    c_(c_.size() - 1) = 0.0;
    return static_cast<int>(kinds_.size()) - 1;
}

int Problem::add_free(const std::string& name) { return new_var(VarKind::Free, name); }

int Problem::add_nonneg(const std::string& name) {
    const int v = new_var(VarKind::Nonneg, name);
    const int b = add_block(1, "nonneg:" + name);
    add_scalar_identity(b, v, -1.0);
    return v;
}

SymVar Problem::add_symmetric(int n, const std::string& name) {
    if (n <= 0) throw std::invalid_argument("add_symmetric: size must be positive");
    SymVar s;
    s.n = n;
    s.offset = num_vars();
    for (int k = 0; k < n; ++k) {
        for (int l = k; l < n; ++l) {
            new_var(VarKind::SymEntry, name + "[" + std::to_string(k) + "," + std::to_string(l) + "]");
        }
    }
    return s;
}

int Problem::add_block(int size, const std::string& name) {
    if (size <= 0) throw std::invalid_argument("add_block: size must be positive");
    Block b;
    b.size = size;
    b.name = name;
    b.F0 = Matrix::Zero(size, size);
    blocks_.push_back(std::move(b));
    return num_blocks() - 1;
}

void Problem::check_block(int block, const char* who) const {
    if (block < 0 || block >= num_blocks()) {
        throw std::out_of_range(std::string(who) + ": bad block index");
    }
}

void Problem::add_constant(int block, const Matrix& f0) {
    check_block(block, "add_constant");
    Block& b = blocks_[block];
    if (f0.rows() != b.size || f0.cols() != b.size) {
        throw std::invalid_argument("add_constant: dimension mismatch in block " + b.name);
    }
    algebra::require_symmetric(f0, "add_constant");
    b.F0 += algebra::symmetrize(f0);
}

int Problem::add_dict(int block, const Vector& w) {
    Block& b = blocks_[block];
    b.dict.push_back(w);
    return static_cast<int>(b.dict.size()) - 1;
}

void Problem::add_scalar_term(int block, int var, const Matrix& R, const Matrix& G, double scale) {
    check_block(block, "add_scalar_term");
    if (var < 0 || var >= num_vars()) throw std::out_of_range("add_scalar_term: bad variable");
    const Block& b = blocks_[block];
    if (R.cols() != b.size || G.rows() != R.rows() || G.cols() != R.rows()) {
        throw std::invalid_argument("add_scalar_term: dimension mismatch in block " + b.name);
    }
    algebra::require_symmetric(G, "add_scalar_term");
    const int k = static_cast<int>(R.rows());
    std::vector<int> col(k, -1);
    auto column = [&](int r) {
        if (col[r] < 0) col[r] = add_dict(block, R.row(r).transpose());
        return col[r];
    };
    for (int a = 0; a < k; ++a) {
        for (int c = a; c < k; ++c) {
            const double g = G(a, c);
            if (g == 0.0) continue;
            const double coef = (a == c ? 1.0 : 2.0) * g * scale;
            const int ca = column(a), cc = column(c);
            blocks_[block].terms.push_back({var, ca, cc, coef});
        }
    }
}

void Problem::add_scalar_identity(int block, int var, double coef) {
    check_block(block, "add_scalar_identity");
    const int n = blocks_[block].size;
    add_scalar_term(block, var, Matrix::Identity(n, n), Matrix::Identity(n, n), coef);
}

void Problem::add_congruence(int block, const SymVar& P, const Matrix& R, double scale) {
    check_block(block, "add_congruence");
    const Block& b = blocks_[block];
    if (R.rows() != P.n || R.cols() != b.size) {
        throw std::invalid_argument("add_congruence: dimension mismatch in block " + b.name);
    }
    std::vector<int> col(P.n);
    for (int k = 0; k < P.n; ++k) col[k] = add_dict(block, R.row(k).transpose());
    for (int k = 0; k < P.n; ++k) {
        for (int l = k; l < P.n; ++l) {
            const double coef = (k == l ? 1.0 : kSqrt2) * scale;
            blocks_[block].terms.push_back({P.index(k, l), col[k], col[l], coef});
        }
    }
}

void Problem::set_objective(int var, double c) {
    if (var < 0 || var >= num_vars()) throw std::out_of_range("set_objective: bad variable");
    c_(var) = c;
}

void Problem::clear_objective() { c_.setZero(); }

Matrix Problem::evaluate(int block, const Vector& y) const {
    check_block(block, "evaluate");
    if (y.size() < num_vars()) throw std::invalid_argument("evaluate: short variable vector");
    const Block& b = blocks_[block];
    Matrix f = b.F0;
    for (const Term& t : b.terms) {
        const double s = 0.5 * t.coef * y(t.var);
        if (s == 0.0) continue;
        f.noalias() += s * b.dict[t.a] * b.dict[t.b].transpose();
        f.noalias() += s * b.dict[t.b] * b.dict[t.a].transpose();
    }
    return f;
}

Matrix Problem::unpack(const SymVar& P, const Vector& y) const {
    Matrix m(P.n, P.n);
    for (int k = 0; k < P.n; ++k) {
        m(k, k) = y(P.index(k, k));
        for (int l = k + 1; l < P.n; ++l) m(k, l) = m(l, k) = y(P.index(k, l)) / kSqrt2;
    }
    return m;
}

Vector Problem::pack(const SymVar& P, const Matrix& value, Vector y) const {
    for (int k = 0; k < P.n; ++k) {
        y(P.index(k, k)) = value(k, k);
        for (int l = k + 1; l < P.n; ++l) y(P.index(k, l)) = kSqrt2 * 0.5 * (value(k, l) + value(l, k));
    }
    return y;
}

// ---- interior-point solver -------------------------------------------------

namespace {

struct BlockData {
    int n = 0;
    Matrix W;  // n x K
    Matrix C;  // -F0
    // Terms of this block grouped by variable.
    std::vector<int> vars;
    std::vector<std::vector<Term>> terms;
};

struct Workspace {
    std::vector<BlockData> blocks;
    Vector b;  // -c
    int m = 0;
    int n_total = 0;
};

Workspace prepare(const Problem& p) {
    Workspace ws;
    ws.m = p.num_vars();
    ws.b = -p.objective();
    for (int bi = 0; bi < p.num_blocks(); ++bi) {
        const Block& src = p.block(bi);
        BlockData bd;
        bd.n = src.size;
        bd.C = -src.F0;
        const int K = static_cast<int>(src.dict.size());
        bd.W.resize(bd.n, K);
        for (int k = 0; k < K; ++k) bd.W.col(k) = src.dict[k];
        std::vector<int> slot(ws.m, -1);
        for (const Term& t : src.terms) {
            if (slot[t.var] < 0) {
                slot[t.var] = static_cast<int>(bd.vars.size());
                bd.vars.push_back(t.var);
                bd.terms.emplace_back();
            }
            bd.terms[slot[t.var]].push_back(t);
        }
        ws.n_total += bd.n;
        ws.blocks.push_back(std::move(bd));
    }
    return ws;
}

// sum_i v_i A_i for one block
Matrix adjoint(const BlockData& bd, const Vector& v) {
    const Eigen::Index K = bd.W.cols();
    Matrix g = Matrix::Zero(K, K);
    for (std::size_t s = 0; s < bd.vars.size(); ++s) {
        const double vi = v(bd.vars[s]);
        if (vi == 0.0) continue;
        for (const Term& t : bd.terms[s]) {
            const double h = 0.5 * t.coef * vi;
            g(t.a, t.b) += h;
            g(t.b, t.a) += h;
        }
    }
    return bd.W * g * bd.W.transpose();
}

// out_i += <A_i, Z> for one block; Z need not be symmetric.
void apply(const BlockData& bd, const Matrix& z, Vector& out) {
    const Matrix zt = bd.W.transpose() * (0.5 * (z + z.transpose())) * bd.W;
    for (std::size_t s = 0; s < bd.vars.size(); ++s) {
        double acc = 0.0;
        for (const Term& t : bd.terms[s]) acc += t.coef * zt(t.a, t.b);
        out(bd.vars[s]) += acc;
    }
}

double frob_inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

// Largest alpha in (0, inf] with X + alpha dX >= 0, given the Cholesky factor
// of X.
double max_step(const Eigen::LLT<Matrix>& llt, const Matrix& dx) {
    const Matrix& l = llt.matrixL();
    Matrix t = l.triangularView<Eigen::Lower>().solve(dx);
    t = l.triangularView<Eigen::Lower>().solve(t.transpose()).transpose();
    const double lmin = algebra::min_eig(algebra::symmetrize(t));
    if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
    return -1.0 / lmin;
}

struct State {
    std::vector<Matrix> X, S;
    Vector y;
};

double block_norm(const std::vector<Matrix>& ms) {
    double s = 0.0;
    for (const auto& m : ms) s += m.squaredNorm();
    return std::sqrt(s);
}

}  // namespace

Solution solve(const Problem& p, const Options& opt) {
    if (!(opt.tol > 0.0)) throw std::invalid_argument("sdp::solve: tol must be positive");
    Workspace ws = prepare(p);
    const int m = ws.m;
    const int nb = static_cast<int>(ws.blocks.size());
    Solution sol;
    sol.y = Vector::Zero(m);
    if (nb == 0) {
        sol.status = m == 0 || p.objective().isZero() ? Status::Optimal : Status::Unbounded;
        return sol;
    }

    // Frobenius norms of the A_i (per block, summed) for scaling the start.
    Vector anorm = Vector::Zero(m);
    for (const auto& bd : ws.blocks) {
        const Matrix gram = bd.W.transpose() * bd.W;
        for (std::size_t s = 0; s < bd.vars.size(); ++s) {
            double acc = 0.0;
            for (const Term& t : bd.terms[s]) {
                for (const Term& u : bd.terms[s]) {
                    acc += 0.5 * t.coef * u.coef *
                           (gram(t.a, u.a) * gram(t.b, u.b) + gram(t.a, u.b) * gram(t.b, u.a));
                }
            }
            anorm(bd.vars[s]) += acc;
        }
    }
    anorm = anorm.cwiseMax(0.0).cwiseSqrt();
    double cnorm = 0.0;
    for (const auto& bd : ws.blocks) cnorm += bd.C.squaredNorm();
    cnorm = std::sqrt(cnorm);
    const double bnorm = ws.b.norm();

    State st;
    st.y = Vector::Zero(m);
    for (const auto& bd : ws.blocks) {
        const double n = bd.n;
        double xi = std::max(10.0, std::sqrt(n));
        for (int i = 0; i < m; ++i) xi = std::max(xi, n * (1.0 + std::abs(ws.b(i))) / (1.0 + anorm(i)));
        const double eta =
            std::max({10.0, std::sqrt(n), (1.0 + std::max(anorm.size() ? anorm.maxCoeff() : 0.0, bd.C.norm())) / std::sqrt(n)});
        st.X.push_back(xi * Matrix::Identity(bd.n, bd.n));
        st.S.push_back(eta * Matrix::Identity(bd.n, bd.n));
    }

    std::vector<Matrix> Rd(nb), Sinv(nb);
    std::vector<Eigen::LLT<Matrix>> xchol(nb), schol(nb);
    int stall = 0;
    double prev_merit = std::numeric_limits<double>::infinity();
    double best_merit = std::numeric_limits<double>::infinity();
    double best_dinf = std::numeric_limits<double>::infinity();

    double shift0 = 1e-14;  // smallest Schur shift worth trying, tracks recent failures
    for (int iter = 0; iter <= opt.max_iter; ++iter) {
        sol.iterations = iter;
        // Residuals and complementarity.
        Vector ax = Vector::Zero(m);
        double mu = 0.0, pobj = 0.0;
        for (int k = 0; k < nb; ++k) {
            const auto& bd = ws.blocks[k];
            Rd[k] = bd.C - st.S[k] - adjoint(bd, st.y);
            apply(bd, st.X[k], ax);
            mu += frob_inner(st.X[k], st.S[k]);
            pobj += frob_inner(bd.C, st.X[k]);
        }
        mu /= ws.n_total;
        const Vector rp = ws.b - ax;
        const double dobj = ws.b.dot(st.y);
        const double pinf = rp.norm() / (1.0 + bnorm);
        const double dinf = block_norm(Rd) / (1.0 + cnorm);
        const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        const double compl_gap = mu * ws.n_total / (1.0 + std::abs(pobj) + std::abs(dobj));

        const double gap = std::max(relgap, compl_gap);
        const double merit = std::max({pinf, dinf, gap});
        if (merit < best_merit) {
            best_merit = merit;
            sol.y = st.y;
            sol.objective = -dobj;
            sol.dual_bound = -pobj;
            sol.dual_residual = pinf;
            sol.gap = gap;
            best_dinf = dinf;
        }

        if (opt.verbose) {
            std::fprintf(stderr, "%3d  obj % .9e  bound % .9e  pinf %.2e  dinf %.2e  gap %.2e\n", iter,
                         -dobj, -pobj, pinf, dinf, sol.gap);
        }
        if (pinf <= opt.feas_tol && dinf <= opt.feas_tol && gap <= opt.tol) {
            sol.status = Status::Optimal;
            break;
        }
        // Certificate that the LMI system has no solution: X >= 0 with
        // A(X) ~ 0 and <C, X> < 0.
        if (pobj < 0.0) {
            const double scale = -pobj;
            if (ax.norm() / scale <= 1e-8 * (1.0 + bnorm) && block_norm(st.X) / scale > 1e6) {
                sol.status = Status::Infeasible;
                break;
            }
        }
        // Unbounded objective: y grows along a recession direction.
        if (dobj > 0.0 && dinf <= 1e-6 && st.y.norm() > 1e12 && dobj > 1e10 * (1.0 + std::abs(pobj))) {
            sol.status = Status::Unbounded;
            break;
        }
        if (iter == opt.max_iter) {
            sol.status = Status::MaxIter;
            break;
        }
        if (merit > 0.999 * prev_merit) {
            if (++stall >= 15) {
                sol.status = Status::MaxIter;
                break;
            }
        } else {
            stall = 0;
        }
        prev_merit = std::min(prev_merit, merit);

        // Schur complement M_ij = <A_i, X A_j S^-1>.
        bool chol_ok = true;
        std::vector<Matrix> Xt(nb), St(nb);
        for (int k = 0; k < nb; ++k) {
            schol[k].compute(st.S[k]);
            xchol[k].compute(st.X[k]);
            if (schol[k].info() != Eigen::Success || xchol[k].info() != Eigen::Success) {
                chol_ok = false;
                break;
            }
            Sinv[k] = schol[k].solve(Matrix::Identity(st.S[k].rows(), st.S[k].rows()));
            Sinv[k] = algebra::symmetrize(Sinv[k]);
            const auto& W = ws.blocks[k].W;
            Xt[k] = W.transpose() * st.X[k] * W;
            St[k] = W.transpose() * Sinv[k] * W;
        }
        if (!chol_ok) {
            sol.status = Status::NumericalError;
            break;
        }
        Matrix M = Matrix::Zero(m, m);
        for (int k = 0; k < nb; ++k) {
            const auto& bd = ws.blocks[k];
            const Matrix& xt = Xt[k];
            const Matrix& stt = St[k];
            const int nv = static_cast<int>(bd.vars.size());
            for (int s1 = 0; s1 < nv; ++s1) {
                const int i = bd.vars[s1];
                for (int s2 = s1; s2 < nv; ++s2) {
                    const int j = bd.vars[s2];
                    double acc = 0.0;
                    for (const Term& t : bd.terms[s1]) {
                        const int a = t.a, b = t.b;
                        for (const Term& u : bd.terms[s2]) {
                            const int c = u.a, d = u.b;
                            acc += t.coef * u.coef *
                                   (xt(b, c) * stt(d, a) + xt(b, d) * stt(c, a) + xt(a, c) * stt(d, b) +
                                    xt(a, d) * stt(c, b));
                        }
                    }
                    acc *= 0.25;
                    M(i, j) += acc;
                    if (i != j) M(j, i) += acc;
                }
            }
        }
        // Symmetric diagonal scaling before the factorization; the raw
        // diagonal spans many orders of magnitude near the optimum.
        Vector dscale = M.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
        Matrix Ms = dscale.asDiagonal() * M * dscale.asDiagonal();
        // Near the optimum M can lose definiteness to rounding; retry with
        // growing diagonal shifts before giving up.
        Eigen::LLT<Matrix> mllt;
        bool factored = false;
        for (double shift = shift0; shift <= 1e-6; shift *= 100.0) {
            Matrix Mr = Ms;
            Mr.diagonal().array() += shift;
            mllt.compute(Mr);
            if (mllt.info() == Eigen::Success) {
                factored = true;
                shift0 = std::max(1e-14, shift * 1e-2);
                break;
            }
        }
        if (!factored) {
            sol.status = Status::NumericalError;
            break;
        }
        auto schur_solve = [&](const Vector& rhs) -> Vector {
            auto raw = [&](const Vector& r) -> Vector {
                const Vector rs = dscale.asDiagonal() * r;
                const Vector z = mllt.solve(rs);
                return dscale.asDiagonal() * z;
            };
            Vector x = raw(rhs);
            // One step of iterative refinement.
            x += raw(rhs - M * x);
            return x;
        };

        // Direction for a given sigma and optional second-order term.
        std::vector<Matrix> dX(nb), dS(nb);
        Vector dy;
        auto direction = [&](double sigma, const std::vector<Matrix>* corr) {
            Vector rhs = ws.b;
            for (int k = 0; k < nb; ++k) {
                const auto& bd = ws.blocks[k];
                Matrix z = -sigma * mu * Sinv[k] + st.X[k] * Rd[k] * Sinv[k];
                if (corr) z += (*corr)[k] * Sinv[k];
                apply(bd, z, rhs);
            }
            dy = schur_solve(rhs);
            for (int k = 0; k < nb; ++k) {
                const auto& bd = ws.blocks[k];
                dS[k] = Rd[k] - adjoint(bd, dy);
                dS[k] = algebra::symmetrize(dS[k]);
                Matrix dx = sigma * mu * Sinv[k] - st.X[k] - st.X[k] * dS[k] * Sinv[k];
                if (corr) dx -= (*corr)[k] * Sinv[k];
                dX[k] = algebra::symmetrize(dx);
            }
        };
        auto steps = [&](double& ap, double& ad) {
            ap = ad = std::numeric_limits<double>::infinity();
            for (int k = 0; k < nb; ++k) {
                ap = std::min(ap, max_step(xchol[k], dX[k]));
                ad = std::min(ad, max_step(schol[k], dS[k]));
            }
        };

        // Predictor.
        direction(0.0, nullptr);
        double ap = 0.0, ad = 0.0;
        steps(ap, ad);
        const double apf = std::min(1.0, ap), adf = std::min(1.0, ad);
        double mu_aff = 0.0;
        for (int k = 0; k < nb; ++k) {
            mu_aff += frob_inner(st.X[k] + apf * dX[k], st.S[k] + adf * dS[k]);
        }
        mu_aff /= ws.n_total;
        const double ratio = std::clamp(mu_aff / mu, 0.0, 1.0);
        const double expon = std::max(1.0, 3.0 * std::min(apf, adf) * std::min(apf, adf));
        double sigma = std::pow(ratio, expon);
        sigma = std::clamp(sigma, 0.0, 1.0);
        if (pinf > 1e-3 || dinf > 1e-3) sigma = std::max(sigma, 1e-2);

        // Corrector.
        std::vector<Matrix> corr(nb);
        for (int k = 0; k < nb; ++k) corr[k] = dX[k] * dS[k];
        direction(sigma, &corr);
        steps(ap, ad);
        const double gamma = 0.9 + 0.09 * std::min({1.0, apf, adf});
        const double tp = std::min(1.0, gamma * ap);
        const double td = std::min(1.0, gamma * ad);
        for (int k = 0; k < nb; ++k) {
            st.X[k] += tp * dX[k];
            st.S[k] += td * dS[k];
        }
        st.y += td * dy;
    }

    // Stopped without meeting the tolerances: the best iterate may still be
    // accurate enough to call optimal.
    if ((sol.status == Status::MaxIter || sol.status == Status::NumericalError) &&
        sol.dual_residual <= opt.feas_tol && best_dinf <= opt.feas_tol && sol.gap <= opt.loose_tol) {
        sol.status = Status::Optimal;
    }
    double viol = 0.0;
    for (int k = 0; k < p.num_blocks(); ++k) viol = std::max(viol, algebra::max_eig(p.evaluate(k, sol.y)));
    sol.primal_residual = viol;
    if (sol.status == Status::Optimal && viol > opt.feas_tol) {
        sol.status = Status::NumericalError;
    }
    return sol;
}

MarginResult feasibility_margin(const Problem& p, const std::vector<int>& shifted_blocks, const Options& opt) {
    Problem ph = p;
    ph.clear_objective();
    const int s = ph.add_free("margin");
    for (int b : shifted_blocks) {
        if (b < 0 || b >= p.num_blocks()) throw std::out_of_range("feasibility_margin: bad block");
        ph.add_scalar_identity(b, s, -1.0);
    }
    // s >= -1
    const int lb = ph.add_block(1, "margin-lower");
    ph.add_constant(lb, Matrix::Constant(1, 1, -1.0));
    ph.add_scalar_identity(lb, s, -1.0);
    ph.set_objective(s, 1.0);

    MarginResult out;
    out.solution = solve(ph, opt);
    out.margin = out.solution.objective;
    out.lower_bound = out.solution.dual_bound;
    // The margin is decided by sign, so a stalled solve whose best iterate
    // has a small gap is good enough.
    out.solved = out.solution.status == Status::Optimal ||
                 (out.solution.dual_residual <= 1e-6 && out.solution.gap <= 1e-3);
    return out;
}

ResidualReport check_solution(const Problem& p, const Solution& sol) {
    ResidualReport rep;
    if (sol.y.size() < p.num_vars()) throw std::invalid_argument("check_solution: short variable vector");
    for (int b = 0; b < p.num_blocks(); ++b) {
        const double e = algebra::max_eig(p.evaluate(b, sol.y));
        rep.block_max_eig.push_back(e);
        rep.max_violation = std::max(rep.max_violation, e);
    }
    for (int v = 0; v < p.num_vars(); ++v) {
        if (p.kind(v) == VarKind::Nonneg) rep.nonneg_violation = std::max(rep.nonneg_violation, -sol.y(v));
    }
    if (sol.status == Status::Infeasible) {
        std::vector<int> all(p.num_blocks());
        for (int b = 0; b < p.num_blocks(); ++b) all[b] = b;
        const MarginResult mr = feasibility_margin(p, all);
        rep.has_margin = true;
        rep.margin = mr.margin;
    }
    return rep;
}

}  // namespace oco::sdp
