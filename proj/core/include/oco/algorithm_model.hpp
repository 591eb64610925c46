#pragma once

#include "oco/algebra.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace oco::model {

using algebra::Matrix;
using algebra::Vector;

struct FunctionClass {
    double m = 1.0;  // strong convexity
    double L = 1.0;  // smoothness

    double kappa() const { return L / m; }
    bool valid() const { return m > 0.0 && L >= m; }
    void validate() const;

    // Classes parameterized by condition ratio.
    static FunctionClass from_kappa_fixed_m(double kappa, double m = 1.0);
    // m + L = 2
    static FunctionClass from_kappa_unit_sum(double kappa);
};

// Base-dimension state-space model of an OCO algorithm. The full model is
// (A, B, C, D) (x) I_d; d is carried separately.
struct AlgorithmRealization {
    std::string name;
    Matrix A, B, C, D;
    int p = 1;  // gradient channels
    int q = 0;  // normal-cone channels
    int d = 1;
    Matrix U;  // fixed-point map, n_xi x 1, filled by compute_fixed_point_map

    int n_xi() const { return static_cast<int>(A.rows()); }
    int channels() const { return p + q; }
    bool constrained() const { return q > 0; }

    // Shape invariants only (no assumptions).
    void check_shapes() const;
};

struct FixedPointResult {
    Matrix U;
    double residual = 0.0;
    bool ok = false;
};

struct StructureReport {
    bool shapes_ok = true;
    bool assumption1_ok = false;
    double assumption1_residual = 0.0;
    bool assumption2_applicable = false;
    bool assumption2_ok = false;
    double assumption2_angle_B = 0.0;
    double assumption2_angle_D = 0.0;
    bool observability_ok = false;
    bool readout_causal_ok = false;
    std::string details;

    bool all_ok() const {
        return shapes_ok && assumption1_ok && (!assumption2_applicable || assumption2_ok) &&
               observability_ok && readout_causal_ok;
    }
    // Name of the first failed check, empty if everything passed.
    std::string first_failure() const;
};

inline constexpr double kStructureTol = 1e-8;

FixedPointResult compute_fixed_point_map(AlgorithmRealization& r);
StructureReport verify_structure(const AlgorithmRealization& r);

// Thrown when a realization is used for certification or simulation but
// fails a structural assumption.
class StructureError : public std::runtime_error {
public:
    StructureError(std::string assumption, const std::string& what)
        : std::runtime_error(what), assumption_(std::move(assumption)) {}
    const std::string& assumption() const { return assumption_; }

private:
    std::string assumption_;
};

// Throws StructureError naming the failed assumption; fills r.U.
void require_structure(AlgorithmRealization& r);

// ---- zoo ---------------------------------------------------------------

AlgorithmRealization make_ogd(double alpha, bool constrained, int d = 1);

// K gradient (and projection) passes per round, state x_t.
AlgorithmRealization make_multistep_ogd(int K, double alpha, bool constrained, int d = 1);

struct MomentumTuning {
    std::optional<double> alpha;
    std::optional<double> beta;
    bool constrained = true;
};

// Nesterov's method: state (x_t, x_{t-1}), gradient and regret at the
// extrapolated point y_t = x_t + beta (x_t - x_{t-1}), x_{t+1} = Pi[y_t - alpha grad].
// Defaults alpha = 1/L, beta = (sqrt(kappa)-1)/(sqrt(kappa)+1).
AlgorithmRealization make_onm(const FunctionClass& fc, int d = 1, const MomentumTuning& t = {});

// Two-channel Nesterov: regret read at s1 = x_t (inert channel), dynamics
// driven by the gradient at s2 = y_t. Unconstrained only.
AlgorithmRealization make_onm_split(const FunctionClass& fc, int d = 1, const MomentumTuning& t = {});

struct CouplingTuning {
    std::optional<double> tau;    // coupling weight, default 1/(1+sqrt(kappa))
    std::optional<double> alpha;  // mirror step, default 1/sqrt(mL)
    bool constrained = true;
};

// Linear-coupling accelerated gradient for strongly convex costs:
//   x = (1-tau) y + tau z
//   y+ = Pi[x - grad/L]
//   z+ = Pi[(z + alpha m x - alpha grad) / (1 + alpha m)]
AlgorithmRealization make_oagd(const FunctionClass& fc, int d = 1, const CouplingTuning& t = {});

// Default zoo tunings for the ids used by the CLI and the sweeps:
// ogd, ogd2, ogd10, onm, oagd. Throws std::invalid_argument on unknown id.
AlgorithmRealization make_zoo(const std::string& id, const FunctionClass& fc, int d = 1,
                              bool constrained = true);
const std::vector<std::string>& zoo_ids();
std::string zoo_label(const std::string& id);

// Standard step 2/(m+L) used by the gradient-descent family.
double default_gd_step(const FunctionClass& fc);

}  // namespace oco::model
