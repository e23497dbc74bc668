#include "relmatch/irm.hpp"

#include "relmatch/errors.hpp"

namespace relmatch {

Value importance_weights(Tape& tape, Value T_l, Value T_g, double tau2) {
    Value raw = tape.matmul_tn(T_l, T_g);  // N x 1
    return tape.softmax_cols(raw, tau2);
}

Value aggregate_local(Tape& tape, Value S_enhanced, Value omega, IrmParams& params) {
    if (S_enhanced.cols != omega.rows || omega.cols != 1) {
        throw DimensionError("aggregate_local: " + std::to_string(S_enhanced.cols) +
                             " similarity vectors vs " + std::to_string(omega.rows) + " weights");
    }
    Value pooled = tape.matmul(S_enhanced, omega);  // k x 1
    return score_global(tape, pooled, params);
}

Value score_global(Tape& tape, Value s_g, IrmParams& params) {
    if (params.g_weights.value.cols() != s_g.rows) {
        throw DimensionError("score head g is " + params.g_weights.value.shape_str() +
                             " but similarity vector has k=" + std::to_string(s_g.rows));
    }
    Value affine = tape.matmul(tape.param(params.g_weights), s_g);  // 1 x 1
    return tape.add(affine, tape.param(params.g_bias));
}

}  // namespace relmatch
