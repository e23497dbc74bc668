#pragma once

#include "relmatch/tape.hpp"

namespace relmatch {

/// Trainable node projections of the semantic-relation graph, both k -> k.
struct SrmParams {
    Param f_x;
    Param f_y;
};

struct NodeProjections {
    Value src;  // k x N, column x is f_x * s'_x
    Value dst;  // k x N, column y is f_y * s'_y
};

NodeProjections project_nodes(Tape& tape, Value S_local, SrmParams& params);

/// Edge weights of the complete directed graph over the N local matchings,
/// E[x][y] = softmax over sources x of (f_x s'_x) . (f_y s'_y). Columns sum to 1;
/// self loops are part of the normalization.
Value edge_weights(Tape& tape, Value P_src, Value P_dst);

/// Semantic-enhanced similarity vectors: s''_y = sum_x E[x][y] * P_src[:,x].
Value propagate(Tape& tape, Value E, Value P_src);

/// project + edge softmax + propagate in one call.
Value srm_enhance(Tape& tape, Value S_local, SrmParams& params);

}  // namespace relmatch
