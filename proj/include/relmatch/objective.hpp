#pragma once

#include <span>
#include <vector>

#include "relmatch/tape.hpp"

namespace relmatch {

/// S[p][q] = cosine(l_p, l_q) over multi-hot label vectors. Symmetric with unit
/// diagonal; every label must have at least one set bit.
Matrix soft_targets(std::span<const std::vector<int>> labels);

struct LossOptions {
    double tau3 = 1.0;
    bool use_global = true;
    bool use_local = true;
    /// Normalize targets to sum 1 along each direction before the cross entropy.
    bool normalize_targets = true;
};

struct LossTerms {
    Value total;
    Value global_term;  // 1x1, zero constant when disabled
    Value local_term;
};

/// Bidirectional soft-target cross entropy. For each enabled score matrix and each
/// direction (rows: image-to-text, columns: text-to-image), takes softmax(X/tau3)
/// along the direction against the direction-normalized targets, averages the two
/// directions, and sums the global and local terms.
LossTerms contrastive_loss(Tape& tape, Value scores_global, Value scores_local,
                           const Matrix& targets, const LossOptions& opts);

}  // namespace relmatch
