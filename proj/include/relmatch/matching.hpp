#pragma once

#include "relmatch/corpus.hpp"
#include "relmatch/tape.hpp"

namespace relmatch {

/// Projected token representations of one image-text pair. T_g is the exact
/// column sum of T_l; I_g is the mean of the local image columns.
struct EmbeddedPair {
    Value I_l;  // d x M
    Value T_l;  // d x N
    Value I_g;  // d x 1
    Value T_g;  // d x 1
};

EmbeddedPair embed(Tape& tape, const TokenPair& pair, Param& p_img, Param& p_txt);
EmbeddedPair embed_tokens(Tape& tape, Value image_tokens, Value text_tokens, Param& p_img,
                          Param& p_txt);

/// For each word i: scores s_i = I_l^T T_{l,i}, attention a_i = softmax(s_i / tau1),
/// V_{l,i} = sum_j a_{i,j} I_{l,j}. Returns V_l (d x N).
Value cross_attend(Tape& tape, Value I_l, Value T_l, double tau1);

/// Splits t and v into k contiguous channel blocks and returns the k x 1 vector of
/// per-block cosines. k = 1 reduces to the plain cosine.
Value block_similarity(Tape& tape, Value t, Value v, int k);

struct PairSimilarities {
    Value s_g;      // k x 1, global matching
    Value S_local;  // k x N, column i is the i-th local matching
};

PairSimilarities pair_similarities(Tape& tape, const EmbeddedPair& ep, double tau1, int k);

}  // namespace relmatch
