#pragma once

#include "oco/algorithm_model.hpp"
#include "oco/certifier.hpp"
#include "oco/iqc.hpp"
#include "oco/metrics.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace oco::sim {

using algebra::Matrix;
using algebra::Vector;
using model::AlgorithmRealization;
using model::FunctionClass;

// X = [lo, hi]^d, or all of R^d when both ends are infinite.
struct Box {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    static Box unbounded() { return {}; }
    static Box cube(double lo, double hi);  // throws on lo >= hi

    bool bounded() const;
    double diameter(int d) const;  // (hi - lo) sqrt(d), inf when unbounded
    Vector clamp(const Vector& x) const;
};

// Deterministic draws on top of std::mt19937_64. The conversions are spelled
// out here because the standard distributions are implementation defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}
    double uniform();                      // (g() >> 11) * 2^-53, in [0, 1)
    double uniform(double lo, double hi);
    double normal();                       // Box-Muller, one value per call
    Vector unit_vector(int d);             // normalized Gaussian vector

private:
    std::mt19937_64 g_;
};

struct ScenarioOptions {
    // Keep the unconstrained minimizers c_t inside X by folding the walk back
    // at the faces. Pointwise IQCs need grad f_t(x_t*) = 0, see the README.
    bool interior = true;
    // Offset steps |b_t - b_{t+1}| <= offset_scale * drift.
    double offset_scale = 1.0;
    // Start at x_1 = x_1* instead of a random point.
    bool start_at_minimizer = false;
};

// f_t(x) = 1/2 (x - c_t)^T H (x - c_t) + b_t, t = 1..T+1. The extra f_{T+1}
// closes the last Delta term of the bound.
struct QuadraticScenario {
    std::uint64_t seed = 0;
    int T = 0, d = 0;
    FunctionClass fc;
    double drift = 0.0;
    Box box;
    Vector h;                      // diagonal of H
    std::vector<Vector> centers;   // T+1
    std::vector<double> offsets;   // T+1
    Vector x1;

    double value(int t, const Vector& x) const;      // t is 0-based
    Vector gradient(int t, const Vector& x) const;
    Vector minimizer(int t) const;                   // clamp of c_t
};

QuadraticScenario generate_scenario(std::uint64_t seed, int T, int d, const FunctionClass& fc, double drift,
                                    const Box& box, const ScenarioOptions& opt = {});

// Closed-loop run. Every vector below is indexed by 0-based t.
struct OcoTrace {
    int T = 0, d = 0, p = 0, q = 0;
    std::vector<Vector> xi;                    // T+1 lifted states, state-major (k*d + j)
    std::vector<std::vector<Vector>> s;        // [t][k] channel output y_k (query or projected point)
    std::vector<std::vector<Vector>> u;        // [t][k] delta_k or g_k
    std::vector<std::vector<Vector>> pre;      // [t][k] cone channels: point before projection
    std::vector<Vector> x;                     // regret point, s[t][0]
    std::vector<Vector> x_star;                // T+1
    std::vector<double> loss, loss_star;       // f_t(x_t), f_t(x_t*)

    // Normal-cone membership: max over t, cone channels and box corners v of
    // g^T (v - z). Nonpositive up to rounding for a correct projection.
    double max_cone_violation(const Box& box) const;
};

OcoTrace run_algorithm(const AlgorithmRealization& r, const QuadraticScenario& sc);

// Order in which the channels can be evaluated; throws std::invalid_argument
// when the feedthrough D forms a loop or a channel feeds itself improperly.
std::vector<int> channel_order(const AlgorithmRealization& r);

// U is the realization's fixed-point map (compute_fixed_point_map).
RegularityMetrics regularity_metrics(const QuadraticScenario& sc, const OcoTrace& trace, const Matrix& U);

// sup over the box [lo, hi] (componentwise) of |f_t - f_{t+1}|, exact
// because the difference is affine.
double step_variation(const QuadraticScenario& sc, int t, const Vector& lo, const Vector& hi);

struct IqcSums {
    std::vector<iqc::FilterKind> kinds;       // per channel block
    std::vector<double> rhs_sensitivity;      // per block
    std::vector<std::vector<double>> step;    // [block][t] psi^T M psi
    std::vector<std::vector<double>> prefix;  // [block][t] running sums
    // Function variation of the first t+1 steps, each sup over the box
    // hull of X and the points seen up to then.
    std::vector<double> v_prefix;
};

// Runs the stacked filter from zeta_1 = 0 over the trace signals.
IqcSums empirical_iqc_sums(const AlgorithmRealization& r, const FunctionClass& fc, const QuadraticScenario& sc,
                           const OcoTrace& trace, iqc::Mode mode);

// |xi_1 - xi_1*|^2 under P (x) I (pointwise), |eta_1|^2 with zeta_1 = 0
// (variational). Only the xi block of P enters either way.
double initial_norm(const cert::RegretCertificate& cert, const AlgorithmRealization& r, const OcoTrace& trace);

// Relative rounding allowance before a negative slack counts as a violation.
inline constexpr double kSlackTolerance = 1e-10;

struct SlackReport {
    std::uint64_t seed = 0;
    double bound = 0.0;
    double regret = 0.0;
    double slack = 0.0;
    double init_norm = 0.0;
    bool violated = false;
};

// Throws std::invalid_argument when the certificate does not match r or is
// infeasible, or when a pointwise certificate meets an unbounded box.
SlackReport compare_bound(const AlgorithmRealization& r, const QuadraticScenario& sc, const OcoTrace& trace,
                          const RegularityMetrics& metrics, const cert::RegretCertificate& cert);

// Header: t, x_j, xstar_j, loss, loss_star, then s<k>_j and u<k>_j per channel.
void write_trace_csv(std::ostream& os, const OcoTrace& trace);

}  // namespace oco::sim
