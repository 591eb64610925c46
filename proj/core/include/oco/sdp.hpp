#pragma once

#include "oco/algebra.hpp"

#include <string>
#include <vector>

// Small dense semidefinite programs of the form
//
//   minimize    c^T y
//   subject to  F_b(y) = F_b0 + sum_i y_i F_bi  <=  0   for every block b
//
// solved with an infeasible-start primal-dual path-following method (HKM
// direction, Mehrotra predictor-corrector). Each F_bi is stored as a short
// list of symmetric rank-two terms over a per-block dictionary of vectors,
// which keeps the Schur complement cheap when a matrix variable enters a
// block through a congruence R^T P R.
namespace oco::sdp {

using algebra::Matrix;
using algebra::Vector;

// Symmetric matrix variable, upper triangle stored row by row with the
// off-diagonal entries scaled by sqrt(2) so that <P, Q> = y_P . y_Q.
struct SymVar {
    int offset = -1;
    int n = 0;
    int index(int k, int l) const;
    int count() const { return n * (n + 1) / 2; }
};

enum class VarKind { Free, Nonneg, SymEntry };

struct Term {
    int var;
    int a, b;     // dictionary columns
    double coef;  // contributes coef * (w_a w_b^T + w_b w_a^T) / 2
};

struct Block {
    int size = 0;
    std::string name;
    Matrix F0;
    std::vector<Vector> dict;
    std::vector<Term> terms;
};

class Problem {
public:
    int add_free(const std::string& name = "");
    // Adds a 1x1 block -v <= 0.
    int add_nonneg(const std::string& name = "");
    SymVar add_symmetric(int n, const std::string& name = "");

    int add_block(int size, const std::string& name = "");
    void add_constant(int block, const Matrix& f0);

    // y_var * scale * R^T G R, R is k x size, G symmetric k x k.
    void add_scalar_term(int block, int var, const Matrix& R, const Matrix& G, double scale = 1.0);
    // y_var * coef * I
    void add_scalar_identity(int block, int var, double coef);
    // scale * R^T P R, R is P.n x size.
    void add_congruence(int block, const SymVar& P, const Matrix& R, double scale = 1.0);

    void set_objective(int var, double c);
    void clear_objective();

    int num_vars() const { return static_cast<int>(kinds_.size()); }
    int num_blocks() const { return static_cast<int>(blocks_.size()); }
    const Block& block(int b) const { return blocks_.at(b); }
    const Vector& objective() const { return c_; }
    VarKind kind(int var) const { return kinds_.at(var); }
    const std::string& var_name(int var) const { return names_.at(var); }

    // Dense F_b(y), assembled term by term.
    Matrix evaluate(int block, const Vector& y) const;
    Matrix unpack(const SymVar& P, const Vector& y) const;
    Vector pack(const SymVar& P, const Matrix& value, Vector y) const;

private:
    std::vector<VarKind> kinds_;
    std::vector<std::string> names_;
    std::vector<Block> blocks_;
    Vector c_;

    int new_var(VarKind k, const std::string& name);
    int add_dict(int block, const Vector& w);
    void check_block(int block, const char* who) const;
};

enum class Status { Optimal, Infeasible, Unbounded, MaxIter, NumericalError };
std::string to_string(Status s);

struct Options {
    double tol = 1e-9;        // normalized duality gap
    double feas_tol = 1e-7;   // relative residuals
    double loose_tol = 1e-7;  // gap accepted from the best iterate when progress stalls
    int max_iter = 120;
    bool verbose = false;
};

struct Solution {
    Status status = Status::MaxIter;
    Vector y;
    double objective = 0.0;
    double dual_bound = 0.0;  // <F0, X>, a lower bound on c^T y when X is dual feasible
    double primal_residual = 0.0;  // max_b lambda_max(F_b(y)), clipped at 0 from below
    double dual_residual = 0.0;    // relative |A(X) - b|
    double gap = 0.0;              // normalized complementarity
    int iterations = 0;

    bool optimal() const { return status == Status::Optimal; }
};

Solution solve(const Problem& p, const Options& opt = {});

struct MarginResult {
    double margin = 0.0;  // s*, feasible iff <= kFeasibleMargin
    double lower_bound = 0.0;  // dual bound on s*
    Solution solution;    // of the phase-1 problem; y has one extra trailing entry s
    bool solved = false;
};

inline constexpr double kFeasibleMargin = 1e-7;

// Phase 1: minimize s subject to F_b(y) <= s I on the listed blocks, the
// remaining blocks unchanged, and s >= -1. The original objective is ignored.
MarginResult feasibility_margin(const Problem& p, const std::vector<int>& shifted_blocks,
                                const Options& opt = {});

struct ResidualReport {
    std::vector<double> block_max_eig;
    double max_violation = 0.0;  // max(0, max eig over all blocks)
    double nonneg_violation = 0.0;
    bool has_margin = false;
    double margin = 0.0;

    bool ok(double tol = 1e-7) const { return max_violation <= tol && nonneg_violation <= tol; }
};

// Recomputes every block densely from the stored data. For an infeasible
// solution the report also carries the phase-1 margin over all blocks.
ResidualReport check_solution(const Problem& p, const Solution& sol);

}  // namespace oco::sdp
