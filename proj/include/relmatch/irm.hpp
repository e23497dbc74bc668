#pragma once

#include "relmatch/tape.hpp"

namespace relmatch {

/// The shared similarity head g(k -> 1), used by both the local and the global
/// branch. g_weights is 1 x k; g_bias is 1 x 1.
struct IrmParams {
    Param g_weights;
    Param g_bias;
};

/// Text-guided importance weights: omega = softmax([T_{l,i}^T T_g]_i / tau2), N x 1.
Value importance_weights(Tape& tape, Value T_l, Value T_g, double tau2);

/// s_hat_l = g_weights * (sum_i omega_i * s''_i) + g_bias, 1 x 1.
Value aggregate_local(Tape& tape, Value S_enhanced, Value omega, IrmParams& params);

/// s_hat_g = g_weights * s'_g + g_bias through the identical parameters.
Value score_global(Tape& tape, Value s_g, IrmParams& params);

}  // namespace relmatch
