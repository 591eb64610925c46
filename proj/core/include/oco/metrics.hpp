#pragma once

namespace oco {

// Regret and regularity measures of one run.
//
// The regularity measures sum over t = 2..T with differences (.)_{t-1} - (.)_t.
// The telescoped bound instead charges every step t = 1..T with
// Delta_t = (.)_t - (.)_{t+1}, which needs f_{T+1}; those sums are kept
// separately. Delta-xi* uses the lifted minimizers xi* = U x*.
struct RegularityMetrics {
    int T = 0;
    double regret = 0.0;              // R_T
    double path_length = 0.0;         // P_T
    double path_length_sq = 0.0;      // S_T
    double function_variation = 0.0;  // V_T, sup over X (infinite if X is unbounded and f moves)
    double gradient_variation = 0.0;  // G_T
    double max_dx = 0.0;              // max over t = 2..T of |x*_{t-1} - x*_t|

    double sum_dxi = 0.0;
    double sum_dxi_sq = 0.0;
    double bound_gradient_variation = 0.0;
    // sup over the bounding box of X and every point the run evaluated
    double bound_function_variation = 0.0;
};

}  // namespace oco
