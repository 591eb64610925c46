#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace oco::algebra {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thrown by symmetric-matrix routines when the input is not symmetric to
// 1e-10 relative.
class NotSymmetric : public std::invalid_argument {
public:
    explicit NotSymmetric(const std::string& what) : std::invalid_argument(what) {}
};

struct EigResult {
    Vector values;   // descending
    Matrix vectors;  // column k pairs with values(k)
};

Matrix kron(const Matrix& a, const Matrix& b);

// max|S - S^T| <= 1e-10 * max(1, max|S|)
bool is_symmetric(const Matrix& s, double rel_tol = 1e-10);
void require_symmetric(const Matrix& s, const char* who);

// Symmetric eigendecomposition, eigenvalues sorted descending.
EigResult eig_sym(const Matrix& s);
double max_eig(const Matrix& s);
double min_eig(const Matrix& s);

// Orthonormal basis of {v : |Mv| <= tol |M| |v|}; zero columns if trivial.
Matrix nullspace_basis(const Matrix& m, double tol = 1e-9);

// Minimum-norm least-squares solution of A X = B.
Matrix solve_linear_least_squares(const Matrix& a, const Matrix& b);

// Largest principal angle (radians) between the column spans of two
// orthonormal bases. Returns pi/2 when the dimensions differ.
double span_distance(const Matrix& q1, const Matrix& q2);

int numerical_rank(const Matrix& m, double tol = 1e-9);

inline Matrix symmetrize(const Matrix& s) { return 0.5 * (s + s.transpose()); }

}  // namespace oco::algebra
