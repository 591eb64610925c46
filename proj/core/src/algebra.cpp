#include "oco/algebra.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace oco::algebra {

Matrix kron(const Matrix& a, const Matrix& b) {
    if (a.size() == 0 || b.size() == 0) return Matrix(a.rows() * b.rows(), a.cols() * b.cols());
    return Eigen::kroneckerProduct(a, b).eval();
}

bool is_symmetric(const Matrix& s, double rel_tol) {
    if (s.rows() != s.cols()) return false;
    if (s.size() == 0) return true;
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    return (s - s.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

void require_symmetric(const Matrix& s, const char* who) {
    if (!is_symmetric(s)) {
        throw NotSymmetric(std::string(who) + ": input is not symmetric");
    }
}

EigResult eig_sym(const Matrix& s) {
    require_symmetric(s, "eig_sym");
    EigResult out;
    if (s.size() == 0) return out;
    // Eigen's self-adjoint solver (tridiagonal QL) is deterministic for a
    // given input. It returns ascending order, so flip.
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s));
    out.values = es.eigenvalues().reverse();
    out.vectors = es.eigenvectors().rowwise().reverse();
    return out;
}

double max_eig(const Matrix& s) {
    if (s.size() == 0) return -std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(s.rows() - 1);
}

double min_eig(const Matrix& s) {
    if (s.size() == 0) return std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

Matrix nullspace_basis(const Matrix& m, double tol) {
    const Eigen::Index n = m.cols();
    if (n == 0) return Matrix(0, 0);
    if (m.rows() == 0) return Matrix::Identity(n, n);
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double norm = sv.size() ? sv(0) : 0.0;
    if (norm == 0.0) return Matrix::Identity(n, n);
    // A right singular vector v_k has |M v_k| = sigma_k, so the kernel test
    // reduces to sigma_k <= tol * |M|.
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
        if (sv(k) > tol * norm) ++rank;
    }
    return svd.matrixV().rightCols(n - rank);
}

Matrix solve_linear_least_squares(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("solve_linear_least_squares: row mismatch");
    if (a.cols() == 0) return Matrix(0, b.cols());
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    return cod.solve(b);
}

double span_distance(const Matrix& q1, const Matrix& q2) {
    if (q1.cols() != q2.cols() || q1.rows() != q2.rows()) return std::numbers::pi / 2;
    if (q1.cols() == 0) return 0.0;
    // sin of the largest principal angle is |(I - Q1 Q1^T) Q2|_2; this
    // stays accurate for tiny angles where acos of a cosine would not.
    const Matrix resid = q2 - q1 * (q1.transpose() * q2);
    Eigen::JacobiSVD<Matrix> svd(resid);
    return std::asin(std::min(1.0, svd.singularValues()(0)));
}

int numerical_rank(const Matrix& m, double tol) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& sv = svd.singularValues();
    if (sv(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
        if (sv(k) > tol * sv(0)) ++r;
    }
    return r;
}

}  // namespace oco::algebra
