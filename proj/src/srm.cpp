#include "relmatch/srm.hpp"

#include "relmatch/errors.hpp"

namespace relmatch {

NodeProjections project_nodes(Tape& tape, Value S_local, SrmParams& params) {
    if (params.f_x.value.rows() != params.f_x.value.cols() ||
        params.f_y.value.rows() != params.f_y.value.cols()) {
        throw DimensionError("project_nodes: f_x and f_y must be square");
    }
    if (params.f_x.value.cols() != S_local.rows) {
        throw DimensionError("project_nodes: f_x is " + params.f_x.value.shape_str() +
                             " but similarity vectors have k=" + std::to_string(S_local.rows));
    }
    NodeProjections out;
    out.src = tape.matmul(tape.param(params.f_x), S_local);
    out.dst = tape.matmul(tape.param(params.f_y), S_local);
    return out;
}

Value edge_weights(Tape& tape, Value P_src, Value P_dst) {
    Value logits = tape.matmul_tn(P_src, P_dst);  // L[x][y] = src_x . dst_y
    return tape.softmax_cols(logits, 1.0);
}

Value propagate(Tape& tape, Value E, Value P_src) {
    return tape.matmul(P_src, E);  // column y = sum_x E[x][y] * src_x
}

Value srm_enhance(Tape& tape, Value S_local, SrmParams& params) {
    NodeProjections proj = project_nodes(tape, S_local, params);
    Value E = edge_weights(tape, proj.src, proj.dst);
    return propagate(tape, E, proj.src);
}

}  // namespace relmatch
