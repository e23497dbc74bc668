#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "relmatch/corpus.hpp"
#include "relmatch/irm.hpp"
#include "relmatch/srm.hpp"
#include "relmatch/tape.hpp"

namespace relmatch {

struct ModelConfig {
    int d = 24;
    int k = 12;
    double tau1 = 4.0;
    double tau2 = 5.0;
    double tau3 = 1.0;
    bool use_srm = true;
    bool use_irm = true;
    bool use_global_loss = true;
    bool use_local_loss = true;
    bool detach_importance = false;
    bool normalize_targets = true;
    std::uint64_t seed = 1;

    void validate() const;
    static ModelConfig from_json_file(const std::filesystem::path& path);
    static ModelConfig from_json_text(const std::string& text);
    std::string to_json() const;
};

/// Trainable parameters: per-modality projections, the SRM node maps, and the
/// shared score head. Initialization is scaled uniform driven by cfg.seed.
struct Model {
    ModelConfig cfg;
    int d_in = 0;
    Param p_img;  // d x d_in
    Param p_txt;  // d x d_in
    SrmParams srm;
    IrmParams irm;

    Model(const ModelConfig& config, int d_in);
    std::vector<Param*> params();
    std::vector<const Param*> params() const;
};

/// Final scalar similarities for one image-text pair.
struct ScorePair {
    double s_hat_g = 0.0;
    double s_hat_l = 0.0;
};

struct ScoreMatrices {
    Value global;  // B x B, entry [p][q] = s_hat_g of image p with text q
    Value local;
};

/// Scores every image against every text of the batch on the given tape.
/// With use_srm off the raw similarity vectors pass through unchanged; with
/// use_irm off the local score pools them uniformly.
ScoreMatrices pair_score_matrix(Tape& tape, std::span<const TokenPair> batch, Model& model);

/// Forward-only scorer over plain matrices; used by evaluation and export where
/// no gradients are needed. Matches the tape path exactly.
class Scorer {
public:
    explicit Scorer(const Model& model) : m_(model) {}

    struct ImageEmb {
        Matrix I_l;  // d x M
        Matrix I_g;  // d x 1
    };
    struct TextEmb {
        Matrix T_l;    // d x N
        Matrix T_g;    // d x 1
        Matrix omega;  // N x 1 importance weights
    };

    ImageEmb embed_image(const Matrix& tokens) const;
    TextEmb embed_text(const Matrix& tokens) const;
    ScorePair score(const ImageEmb& img, const TextEmb& txt) const;

    struct Details {
        Matrix attention;   // M x N cross-attention weights, columns sum to 1
        Matrix S_local;     // k x N
        Matrix S_enhanced;  // k x N
        Matrix edges;       // N x N, column-stochastic
        Matrix omega;       // N x 1
        ScorePair score;
    };
    Details score_with_details(const ImageEmb& img, const TextEmb& txt) const;

private:
    const Model& m_;
};

}  // namespace relmatch
