#pragma once

#include "oco/algorithm_model.hpp"

#include <string>
#include <vector>

namespace oco::iqc {

using algebra::Matrix;
using model::AlgorithmRealization;
using model::FunctionClass;

enum class MultiplierKind { M1, M2 };
enum class FilterKind { PointwiseSector, PointwiseCone, VariationalGradient, VariationalCone };
enum class Mode { Pointwise, Variational };

enum class Signal { IterateError, OracleOutput, MinimizerVariation, GradientVariation };

// [[0,1],[1,0]]
Matrix m1_multiplier();

// Multiplier for the variational gradient filter. Weights on (psi3..psi6)
// are (1/2, -1, 1, -1/2); with these the sum over any horizon is bounded
// below by -2(L-m) V_T, which implies the -4(L-m) V_T form.
Matrix m2_multiplier();

// blkdiag(M1/2, diag(1,-1), diag(1,-1)/2) as printed alongside the filter.
// Kept for comparison only: it admits negative sums on static problems.
Matrix m2_multiplier_printed();

struct FilterRealization {
    FilterKind kind = FilterKind::PointwiseSector;
    Matrix A, B, C, D;  // base
    Matrix M;           // multiplier base, output_dim x output_dim
    MultiplierKind multiplier = MultiplierKind::M1;
    std::vector<Signal> inputs;
    // The IQC reads sum psi^T M psi >= -rhs_sensitivity * V_T.
    double rhs_sensitivity = 0.0;

    int n_state() const { return static_cast<int>(A.rows()); }
    int input_dim() const { return static_cast<int>(B.cols()); }
    int output_dim() const { return static_cast<int>(C.rows()); }
};

FilterRealization pointwise_sector_filter(const FunctionClass& fc);
FilterRealization pointwise_cone_filter();
FilterRealization variational_gradient_filter(const FunctionClass& fc);
FilterRealization variational_cone_filter();

// One channel's slice of the stacked filter.
struct ChannelBlock {
    FilterKind kind = FilterKind::PointwiseSector;
    int channel = 0;        // index into u (0..p+q-1)
    int output_offset = 0;  // rows of psi in multiplier order
    int output_dim = 0;
    int state_offset = 0;
    int state_dim = 0;
    Matrix M;
    double rhs_sensitivity = 0.0;
    bool gradient() const {
        return kind == FilterKind::PointwiseSector || kind == FilterKind::VariationalGradient;
    }
};

// Concatenated filter over the stacked signal
//   pointwise:   w = (y~, u)
//   variational: w = (y~, u, dxi*, ddelta_1..ddelta_p)
// with A = A^, B = B^ S_in, C = S_out C^, D = S_out D^ S_in.
struct StackedFilter {
    Mode mode = Mode::Pointwise;
    int p = 0, q = 0, n_xi = 0;
    Matrix A, B, C, D;
    Matrix A_hat, B_hat, C_hat, D_hat;  // block-diagonal concatenation
    Matrix S_in, S_out;
    std::vector<ChannelBlock> blocks;

    int signal_dim() const { return static_cast<int>(B.cols()); }
    int n_state() const { return static_cast<int>(A.rows()); }
    int output_dim() const { return static_cast<int>(C.rows()); }

    // Column ranges of the stacked signal.
    int col_y() const { return 0; }
    int col_u() const { return p + q; }
    int col_dxi() const { return 2 * (p + q); }
    int col_ddelta() const { return 2 * (p + q) + n_xi; }
};

// Channel ordering: gradient channels 1..p then cone channels 1..q.
StackedFilter stack_filters(const AlgorithmRealization& r, const FunctionClass& fc, Mode mode);

// Block-diagonal multiplier sum_k lambda_k M_k in stacked output order.
Matrix stacked_multiplier(const StackedFilter& sf, const std::vector<double>& lambda);

std::string to_string(FilterKind k);
std::string to_string(Mode m);

}  // namespace oco::iqc
