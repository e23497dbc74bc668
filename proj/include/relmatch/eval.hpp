#pragma once

#include <map>
#include <string>
#include <vector>

#include "relmatch/corpus.hpp"
#include "relmatch/model.hpp"

namespace relmatch {

/// Which scalar similarity drives ranking at inference time. The relation-enhanced
/// local score is the default; the others exist for comparison.
enum class ScoreKind { local, global, mean };

ScoreKind score_kind_from_string(const std::string& s);

struct RetrievalResult {
    std::map<int, double> p_at_k_i2t;  // K -> precision as a fraction in [0,1]
    std::map<int, double> p_at_k_t2i;
    double p_sum = 0.0;  // sum of all six P@K values in percent, max 600
};

/// Relevance is class agreement (shared label bit), the class-exclusive 5x200
/// protocol. Ks larger than the candidate pool are a contract error.
RetrievalResult eval_retrieval(const Model& model, const Corpus& corpus,
                               const std::vector<int>& ks = {1, 5, 10},
                               ScoreKind kind = ScoreKind::local);

struct ZeroShotResult {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_f1 = 0.0;
    double macro_auroc = 0.0;
    std::vector<int> predictions;  // predicted class per test pair
};

/// Class score = mean similarity over that class's prompt variants; prediction is
/// the argmax with ties broken by the lowest class index.
ZeroShotResult eval_zeroshot(const Model& model, const Corpus& corpus,
                             ScoreKind kind = ScoreKind::local);

struct GroundingResult {
    double score = 0.0;  // pointing-game hit rate over evaluated pairs
    int evaluated = 0;
    int skipped = 0;  // pairs without signal patches
};

/// Response of patch j is the cosine between the class prompt's global text
/// representation and the j-th local image representation; a hit means the argmax
/// patch (lowest index on ties) lies in the pair's signal set.
GroundingResult eval_grounding(const Model& model, const Corpus& corpus);

/// One-vs-rest area under the ROC curve via the rank statistic with midrank tie
/// handling. Returns 0.5 when a class is empty.
double auroc(const std::vector<double>& scores, const std::vector<int>& is_positive);

}  // namespace relmatch
