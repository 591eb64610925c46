#include "oco/iqc.hpp"

#include <cmath>
#include <stdexcept>

namespace oco::iqc {

Matrix m1_multiplier() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

namespace {

Matrix m2_with_weights(double w3, double w4, double w5, double w6) {
    Matrix m = Matrix::Zero(6, 6);
    m.topLeftCorner(2, 2) = 0.5 * m1_multiplier();
    m(2, 2) = w3;
    m(3, 3) = w4;
    m(4, 4) = w5;
    m(5, 5) = w6;
    return m;
}

}  // namespace

Matrix m2_multiplier() { return m2_with_weights(0.5, -1.0, 1.0, -0.5); }

Matrix m2_multiplier_printed() { return m2_with_weights(1.0, -1.0, 0.5, -0.5); }

FilterRealization pointwise_sector_filter(const FunctionClass& fc) {
    fc.validate();
    FilterRealization f;
    f.kind = FilterKind::PointwiseSector;
    f.A = Matrix(0, 0);
    f.B = Matrix(0, 2);
    f.C = Matrix(2, 0);
    f.D.resize(2, 2);
    f.D << fc.L, -1.0, -fc.m, 1.0;
    f.M = m1_multiplier();
    f.multiplier = MultiplierKind::M1;
    f.inputs = {Signal::IterateError, Signal::OracleOutput};
    return f;
}

FilterRealization pointwise_cone_filter() {
    FilterRealization f;
    f.kind = FilterKind::PointwiseCone;
    f.A = Matrix(0, 0);
    f.B = Matrix(0, 2);
    f.C = Matrix(2, 0);
    f.D = Matrix::Identity(2, 2);
    f.M = m1_multiplier();
    f.multiplier = MultiplierKind::M1;
    f.inputs = {Signal::IterateError, Signal::OracleOutput};
    return f;
}

FilterRealization variational_gradient_filter(const FunctionClass& fc) {
    fc.validate();
    const double m = fc.m, L = fc.L;
    const double a = std::sqrt(m * (L - m) / 2.0);
    FilterRealization f;
    f.kind = FilterKind::VariationalGradient;
    // Inputs (e, delta, dx*, ddelta). States: one-step lags of e + dx*,
    // delta - ddelta, the lagged sector residual and a*e.
    f.A = Matrix::Zero(4, 4);
    f.B.resize(4, 4);
    f.B << 1, 0, 1, 0,
           0, 1, 0, -1,
           -m, 1, 0, 0,
           a, 0, 0, 0;
    f.C.resize(6, 4);
    f.C << -L, 1, 0, 0,
           0, 0, 0, 0,
           0, 0, 1, 0,
           a, 0, 0, 0,
           0, 0, 0, 1,
           -m, 1, 0, 0;
    f.D = Matrix::Zero(6, 4);
    f.D(0, 0) = L;
    f.D(0, 1) = -1;
    f.D(1, 0) = -m;
    f.D(1, 1) = 1;
    f.M = m2_multiplier();
    f.multiplier = MultiplierKind::M2;
    f.inputs = {Signal::IterateError, Signal::OracleOutput, Signal::MinimizerVariation,
                Signal::GradientVariation};
    f.rhs_sensitivity = 4.0 * (L - m);
    return f;
}

FilterRealization variational_cone_filter() {
    FilterRealization f;
    f.kind = FilterKind::VariationalCone;
    f.A = Matrix::Zero(1, 1);
    f.B.resize(1, 3);
    f.B << 1, 0, 1;
    f.C.resize(2, 1);
    f.C << -1, 0;
    f.D = Matrix::Zero(2, 3);
    f.D(0, 0) = 1;
    f.D(1, 1) = 1;
    f.M = m1_multiplier();
    f.multiplier = MultiplierKind::M1;
    f.inputs = {Signal::IterateError, Signal::OracleOutput, Signal::MinimizerVariation};
    return f;
}

StackedFilter stack_filters(const AlgorithmRealization& r, const FunctionClass& fc, Mode mode) {
    r.check_shapes();
    fc.validate();
    StackedFilter sf;
    sf.mode = mode;
    sf.p = r.p;
    sf.q = r.q;
    sf.n_xi = r.n_xi();
    const int nu = r.p + r.q;
    const int nw = mode == Mode::Pointwise ? 2 * nu : 2 * nu + sf.n_xi + r.p;

    std::vector<FilterRealization> parts;
    parts.reserve(nu);
    for (int k = 0; k < nu; ++k) {
        const bool grad = k < r.p;
        if (mode == Mode::Pointwise) {
            parts.push_back(grad ? pointwise_sector_filter(fc) : pointwise_cone_filter());
        } else {
            parts.push_back(grad ? variational_gradient_filter(fc) : variational_cone_filter());
        }
    }

    int ns = 0, ni = 0, no = 0;
    for (const auto& f : parts) {
        ns += f.n_state();
        ni += f.input_dim();
        no += f.output_dim();
    }
    sf.A_hat = Matrix::Zero(ns, ns);
    sf.B_hat = Matrix::Zero(ns, ni);
    sf.C_hat = Matrix::Zero(no, ns);
    sf.D_hat = Matrix::Zero(no, ni);
    sf.S_in = Matrix::Zero(ni, nw);
    // Outputs are already concatenated in multiplier order.
    sf.S_out = Matrix::Identity(no, no);

    int so = 0, io = 0, oo = 0;
    for (int k = 0; k < nu; ++k) {
        const auto& f = parts[k];
        const int fs = f.n_state(), fi = f.input_dim(), fo = f.output_dim();
        sf.A_hat.block(so, so, fs, fs) = f.A;
        sf.B_hat.block(so, io, fs, fi) = f.B;
        sf.C_hat.block(oo, so, fo, fs) = f.C;
        sf.D_hat.block(oo, io, fo, fi) = f.D;
        for (int s = 0; s < fi; ++s) {
            switch (f.inputs[s]) {
                case Signal::IterateError: sf.S_in(io + s, sf.col_y() + k) = 1.0; break;
                case Signal::OracleOutput: sf.S_in(io + s, sf.col_u() + k) = 1.0; break;
                case Signal::MinimizerVariation:
                    // Every channel's minimizer moves together: dx* = C_k dxi*.
                    sf.S_in.block(io + s, sf.col_dxi(), 1, sf.n_xi) = r.C.row(k);
                    break;
                case Signal::GradientVariation: sf.S_in(io + s, sf.col_ddelta() + k) = 1.0; break;
            }
        }
        ChannelBlock b;
        b.kind = f.kind;
        b.channel = k;
        b.output_offset = oo;
        b.output_dim = fo;
        b.state_offset = so;
        b.state_dim = fs;
        b.M = f.M;
        b.rhs_sensitivity = f.rhs_sensitivity;
        sf.blocks.push_back(std::move(b));
        so += fs;
        io += fi;
        oo += fo;
    }
    sf.A = sf.A_hat;
    sf.B = sf.B_hat * sf.S_in;
    sf.C = sf.S_out * sf.C_hat;
    sf.D = sf.S_out * sf.D_hat * sf.S_in;
    return sf;
}

Matrix stacked_multiplier(const StackedFilter& sf, const std::vector<double>& lambda) {
    if (lambda.size() != sf.blocks.size()) {
        throw std::invalid_argument("stacked_multiplier: expected one weight per channel");
    }
    Matrix m = Matrix::Zero(sf.output_dim(), sf.output_dim());
    for (std::size_t k = 0; k < sf.blocks.size(); ++k) {
        const auto& b = sf.blocks[k];
        m.block(b.output_offset, b.output_offset, b.output_dim, b.output_dim) = lambda[k] * b.M;
    }
    return m;
}

std::string to_string(FilterKind k) {
    switch (k) {
        case FilterKind::PointwiseSector: return "pointwise-sector";
        case FilterKind::PointwiseCone: return "pointwise-cone";
        case FilterKind::VariationalGradient: return "variational-gradient";
        case FilterKind::VariationalCone: return "variational-cone";
    }
    return "?";
}

std::string to_string(Mode m) { return m == Mode::Pointwise ? "pointwise" : "variational"; }

}  // namespace oco::iqc
