#include "relmatch/matching.hpp"

#include "relmatch/errors.hpp"

namespace relmatch {

EmbeddedPair embed_tokens(Tape& tape, Value image_tokens, Value text_tokens, Param& p_img,
                          Param& p_txt) {
    if (p_img.value.cols() != image_tokens.rows) {
        throw DimensionError("embed: image projection is " + p_img.value.shape_str() +
                             " but image tokens have " + std::to_string(image_tokens.rows) +
                             " channels");
    }
    if (p_txt.value.cols() != text_tokens.rows) {
        throw DimensionError("embed: text projection is " + p_txt.value.shape_str() +
                             " but text tokens have " + std::to_string(text_tokens.rows) +
                             " channels");
    }
    EmbeddedPair ep;
    ep.I_l = tape.matmul(tape.param(p_img), image_tokens);
    ep.T_l = tape.matmul(tape.param(p_txt), text_tokens);
    ep.T_g = tape.col_sum(ep.T_l);
    ep.I_g = tape.col_mean(ep.I_l);
    return ep;
}

EmbeddedPair embed(Tape& tape, const TokenPair& pair, Param& p_img, Param& p_txt) {
    return embed_tokens(tape, tape.constant(pair.image_tokens), tape.constant(pair.text_tokens),
                        p_img, p_txt);
}

Value cross_attend(Tape& tape, Value I_l, Value T_l, double tau1) {
    Value scores = tape.matmul_tn(I_l, T_l);              // M x N, column per word
    Value attn = tape.softmax_cols(scores, tau1);         // M x N
    return tape.matmul(I_l, attn);                        // d x N
}

Value block_similarity(Tape& tape, Value t, Value v, int k) {
    if (t.cols != 1 || v.cols != 1) {
        throw DimensionError("block_similarity: expected column vectors");
    }
    return tape.block_cosine_cols(t, v, k);
}

PairSimilarities pair_similarities(Tape& tape, const EmbeddedPair& ep, double tau1, int k) {
    PairSimilarities out;
    Value V_l = cross_attend(tape, ep.I_l, ep.T_l, tau1);
    out.S_local = tape.block_cosine_cols(ep.T_l, V_l, k);
    out.s_g = tape.block_cosine_cols(ep.T_g, ep.I_g, k);
    return out;
}

}  // namespace relmatch
