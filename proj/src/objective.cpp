#include "relmatch/objective.hpp"

#include <cmath>

#include "relmatch/errors.hpp"

namespace relmatch {

namespace {

Matrix normalize_rows(const Matrix& t) {
    Matrix out = t;
    for (int i = 0; i < t.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < t.cols(); ++j) s += t(i, j);
        if (!(s > 0.0)) {
            throw ContractError("contrastive_loss: target row " + std::to_string(i) +
                                " sums to zero");
        }
        for (int j = 0; j < t.cols(); ++j) out(i, j) /= s;
    }
    return out;
}

}  // namespace

Matrix soft_targets(std::span<const std::vector<int>> labels) {
    const int b = static_cast<int>(labels.size());
    std::vector<double> norms(b);
    for (int i = 0; i < b; ++i) {
        if (labels[i].size() != labels[0].size()) {
            throw DimensionError("soft_targets: label length mismatch");
        }
        double s = 0.0;
        for (int v : labels[i]) s += static_cast<double>(v) * v;
        if (s <= 0.0) {
            throw ContractError("soft_targets: label " + std::to_string(i) + " has no set bit");
        }
        norms[i] = std::sqrt(s);
    }
    Matrix t(b, b);
    for (int p = 0; p < b; ++p) {
        for (int q = 0; q < b; ++q) {
            double dot = 0.0;
            for (std::size_t z = 0; z < labels[p].size(); ++z) {
                dot += static_cast<double>(labels[p][z]) * labels[q][z];
            }
            t(p, q) = dot / (norms[p] * norms[q]);
        }
    }
    return t;
}

LossTerms contrastive_loss(Tape& tape, Value scores_global, Value scores_local,
                           const Matrix& targets, const LossOptions& opts) {
    if (!(opts.tau3 > 0.0)) {
        throw ParameterError("contrastive_loss: tau3 must be > 0, got " +
                             std::to_string(opts.tau3));
    }
    if (!opts.use_global && !opts.use_local) {
        throw ConfigError("contrastive_loss: at least one branch must be enabled");
    }
    const int b = targets.rows();
    if (targets.cols() != b) {
        throw DimensionError("contrastive_loss: targets must be square, got " +
                             targets.shape_str());
    }
    auto check_scores = [b](Value v, const char* name) {
        if (v.rows != b || v.cols != b) {
            throw DimensionError(std::string("contrastive_loss: ") + name + " is " +
                                 std::to_string(v.rows) + "x" + std::to_string(v.cols) +
                                 ", expected " + std::to_string(b) + "x" + std::to_string(b));
        }
    };
    check_scores(scores_global, "global score matrix");
    check_scores(scores_local, "local score matrix");

    // Direction "rows" is image-to-text: softmax over texts q for a fixed image p,
    // i.e. a column softmax of the transposed matrix.
    const Matrix t_rows = opts.normalize_targets ? normalize_rows(targets) : targets;
    const Matrix t_cols =
        opts.normalize_targets ? transpose(normalize_rows(transpose(targets))) : targets;

    auto branch = [&](Value x) {
        Value ce_rows = tape.soft_ce_cols(tape.transpose(x), transpose(t_rows), opts.tau3);
        Value ce_cols = tape.soft_ce_cols(x, t_cols, opts.tau3);
        return tape.scale(tape.add(ce_rows, ce_cols), 0.5 / b);
    };

    LossTerms out;
    Value zero = tape.constant(Matrix(1, 1));
    out.global_term = opts.use_global ? branch(scores_global) : zero;
    out.local_term = opts.use_local ? branch(scores_local) : zero;
    if (opts.use_global && opts.use_local) {
        out.total = tape.add(out.global_term, out.local_term);
    } else {
        out.total = opts.use_global ? out.global_term : out.local_term;
    }
    return out;
}

}  // namespace relmatch
