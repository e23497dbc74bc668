#include "relmatch/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relmatch/errors.hpp"

namespace relmatch {

namespace {

double pick(const ScorePair& s, ScoreKind kind) {
    switch (kind) {
        case ScoreKind::local: return s.s_hat_l;
        case ScoreKind::global: return s.s_hat_g;
        case ScoreKind::mean: return 0.5 * (s.s_hat_g + s.s_hat_l);
    }
    return s.s_hat_l;
}

bool share_class(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] && b[i]) return true;
    }
    return false;
}

/// Candidate order for one query: score descending, index ascending on ties.
std::vector<int> ranked(const std::vector<double>& scores) {
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

ScoreKind score_kind_from_string(const std::string& s) {
    if (s == "local") return ScoreKind::local;
    if (s == "global") return ScoreKind::global;
    if (s == "mean") return ScoreKind::mean;
    throw ParameterError("unknown score kind '" + s + "', expected local|global|mean");
}

RetrievalResult eval_retrieval(const Model& model, const Corpus& corpus,
                               const std::vector<int>& ks, ScoreKind kind) {
    const std::vector<int> test_idx = corpus.split_indices("test");
    const int n = static_cast<int>(test_idx.size());
    if (n == 0) throw ContractError("eval_retrieval: corpus has no test split");
    for (int k : ks) {
        if (k < 1 || k > n) {
            throw ContractError("eval_retrieval: K=" + std::to_string(k) +
                                " exceeds candidate pool of " + std::to_string(n));
        }
    }

    Scorer scorer(model);
    std::vector<Scorer::ImageEmb> images;
    std::vector<Scorer::TextEmb> texts;
    std::vector<std::vector<int>> labels;
    images.reserve(n);
    texts.reserve(n);
    for (int idx : test_idx) {
        TokenPair p = corpus.load(idx);
        images.push_back(scorer.embed_image(p.image_tokens));
        texts.push_back(scorer.embed_text(p.text_tokens));
        labels.push_back(p.label);
    }

    std::vector<std::vector<double>> score(n, std::vector<double>(n));
    for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) {
            score[p][q] = pick(scorer.score(images[p], texts[q]), kind);
        }
    }

    RetrievalResult out;
    auto precision_at = [&](bool image_query) {
        std::map<int, double> result;
        for (int k : ks) result[k] = 0.0;
        std::vector<double> row(n);
        for (int q = 0; q < n; ++q) {
            for (int c = 0; c < n; ++c) row[c] = image_query ? score[q][c] : score[c][q];
            const std::vector<int> order = ranked(row);
            for (int k : ks) {
                int hits = 0;
                for (int i = 0; i < k; ++i) {
                    if (share_class(labels[q], labels[order[i]])) ++hits;
                }
                result[k] += static_cast<double>(hits) / k;
            }
        }
        for (auto& [k, v] : result) v /= n;
        return result;
    };
    out.p_at_k_i2t = precision_at(true);
    out.p_at_k_t2i = precision_at(false);
    for (const auto& [k, v] : out.p_at_k_i2t) out.p_sum += 100.0 * v;
    for (const auto& [k, v] : out.p_at_k_t2i) out.p_sum += 100.0 * v;
    return out;
}

ZeroShotResult eval_zeroshot(const Model& model, const Corpus& corpus, ScoreKind kind) {
    const std::vector<int> test_idx = corpus.split_indices("test");
    if (test_idx.empty()) throw ContractError("eval_zeroshot: corpus has no test split");
    const auto prompts = corpus.load_prompts();
    if (prompts.empty()) throw ContractError("eval_zeroshot: corpus has no class prompts");

    Scorer scorer(model);
    std::vector<int> classes;
    std::vector<std::vector<Scorer::TextEmb>> prompt_embs;
    for (const auto& [cls, variants] : prompts) {
        classes.push_back(cls);
        std::vector<Scorer::TextEmb> embs;
        for (const TokenPair& p : variants) embs.push_back(scorer.embed_text(p.text_tokens));
        prompt_embs.push_back(std::move(embs));
    }
    const int n_classes = static_cast<int>(classes.size());

    std::vector<int> truth;
    std::vector<std::vector<double>> class_scores;  // [pair][class]
    for (int idx : test_idx) {
        TokenPair p = corpus.load(idx);
        bool known = false;
        for (int c : classes) known = known || c == p.meta.class_index;
        if (!known) {
            throw ContractError("eval_zeroshot: no prompts for class " +
                                std::to_string(p.meta.class_index) + " of pair '" + p.id + "'");
        }
        const Scorer::ImageEmb img = scorer.embed_image(p.image_tokens);
        std::vector<double> row(n_classes);
        for (int c = 0; c < n_classes; ++c) {
            double mean = 0.0;
            for (const auto& emb : prompt_embs[c]) mean += pick(scorer.score(img, emb), kind);
            row[c] = mean / static_cast<double>(prompt_embs[c].size());
        }
        class_scores.push_back(std::move(row));
        truth.push_back(p.meta.class_index);
    }

    ZeroShotResult out;
    const int n = static_cast<int>(truth.size());
    std::vector<int> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int c = 1; c < n_classes; ++c) {
            if (class_scores[i][c] > class_scores[i][best]) best = c;  // ties keep lowest index
        }
        out.predictions.push_back(classes[best]);
        int true_slot = -1;
        for (int c = 0; c < n_classes; ++c) {
            if (classes[c] == truth[i]) true_slot = c;
        }
        if (best == true_slot) {
            ++tp[best];
        } else {
            ++fp[best];
            ++fn[true_slot];
        }
    }
    out.accuracy = static_cast<double>(std::accumulate(tp.begin(), tp.end(), 0)) / n;

    double prec_sum = 0.0, f1_sum = 0.0, auroc_sum = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        const double prec = tp[c] + fp[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fp[c]) : 0.0;
        const double rec = tp[c] + fn[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fn[c]) : 0.0;
        prec_sum += prec;
        f1_sum += prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;

        std::vector<double> scores(n);
        std::vector<int> positive(n);
        for (int i = 0; i < n; ++i) {
            scores[i] = class_scores[i][c];
            positive[i] = truth[i] == classes[c] ? 1 : 0;
        }
        auroc_sum += auroc(scores, positive);
    }
    out.macro_precision = prec_sum / n_classes;
    out.macro_f1 = f1_sum / n_classes;
    out.macro_auroc = auroc_sum / n_classes;
    return out;
}

GroundingResult eval_grounding(const Model& model, const Corpus& corpus) {
    const std::vector<int> test_idx = corpus.split_indices("test");
    if (test_idx.empty()) throw ContractError("eval_grounding: corpus has no test split");
    const auto prompts = corpus.load_prompts();

    Scorer scorer(model);
    std::map<int, Matrix> prompt_tg;  // class -> T_g of the class keyword prompt
    for (const auto& [cls, variants] : prompts) {
        prompt_tg.emplace(cls, scorer.embed_text(variants.front().text_tokens).T_g);
    }

    GroundingResult out;
    int hits = 0;
    for (int idx : test_idx) {
        TokenPair p = corpus.load(idx);
        if (p.signal_patches.empty()) {
            ++out.skipped;
            continue;
        }
        auto it = prompt_tg.find(p.meta.class_index);
        if (it == prompt_tg.end()) {
            throw ContractError("eval_grounding: no prompt for class " +
                                std::to_string(p.meta.class_index));
        }
        const Matrix I_l = matmul(model.p_img.value, p.image_tokens);
        const Matrix& tg = it->second;
        std::span<const double> tspan(tg.data(), tg.size());

        int best = 0;
        double best_response = -2.0;
        std::vector<double> col(I_l.rows());
        for (int j = 0; j < I_l.cols(); ++j) {
            for (int r = 0; r < I_l.rows(); ++r) col[r] = I_l(r, j);
            const double resp = cosine(tspan, col);
            if (resp > best_response) {  // strict: ties keep the lowest index
                best_response = resp;
                best = j;
            }
        }
        ++out.evaluated;
        if (std::find(p.signal_patches.begin(), p.signal_patches.end(), best) !=
            p.signal_patches.end()) {
            ++hits;
        }
    }
    out.score = out.evaluated > 0 ? static_cast<double>(hits) / out.evaluated : 0.0;
    return out;
}

double auroc(const std::vector<double>& scores, const std::vector<int>& is_positive) {
    if (scores.size() != is_positive.size()) throw DimensionError("auroc: length mismatch");
    const int n = static_cast<int>(scores.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] < scores[b]; });

    // midranks over tied score groups
    std::vector<double> rank(n);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = 0.5 * (i + j) + 1.0;  // ranks are 1-based
        for (int t = i; t <= j; ++t) rank[order[t]] = mid;
        i = j + 1;
    }

    double pos_rank_sum = 0.0;
    int n_pos = 0;
    for (int t = 0; t < n; ++t) {
        if (is_positive[t]) {
            pos_rank_sum += rank[t];
            ++n_pos;
        }
    }
    const int n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return 0.5;
    return (pos_rank_sum - 0.5 * n_pos * (n_pos + 1.0)) / (static_cast<double>(n_pos) * n_neg);
}

}  // namespace relmatch
