#include "relmatch/model.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "relmatch/errors.hpp"
#include "relmatch/matching.hpp"
#include "relmatch/objective.hpp"
#include "relmatch/rng.hpp"

namespace relmatch {

using nlohmann::json;

void ModelConfig::validate() const {
    if (d < 1 || k < 1 || d % k != 0) {
        throw ConfigError("ModelConfig: d=" + std::to_string(d) + " must be a positive multiple of k=" +
                          std::to_string(k));
    }
    if (!(tau1 > 0.0) || !(tau2 > 0.0) || !(tau3 > 0.0)) {
        throw ConfigError("ModelConfig: temperatures must be > 0");
    }
    if (!use_global_loss && !use_local_loss) {
        throw ConfigError("ModelConfig: at least one loss branch must be enabled");
    }
}

ModelConfig ModelConfig::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("ModelConfig: cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

ModelConfig ModelConfig::from_json_text(const std::string& text) {
    json j = json::parse(text);
    ModelConfig c;
    if (j.contains("d")) c.d = j["d"].get<int>();
    if (j.contains("k")) c.k = j["k"].get<int>();
    if (j.contains("tau1")) c.tau1 = j["tau1"].get<double>();
    if (j.contains("tau2")) c.tau2 = j["tau2"].get<double>();
    if (j.contains("tau3")) c.tau3 = j["tau3"].get<double>();
    if (j.contains("use_srm")) c.use_srm = j["use_srm"].get<bool>();
    if (j.contains("use_irm")) c.use_irm = j["use_irm"].get<bool>();
    if (j.contains("use_global_loss")) c.use_global_loss = j["use_global_loss"].get<bool>();
    if (j.contains("use_local_loss")) c.use_local_loss = j["use_local_loss"].get<bool>();
    if (j.contains("detach_importance")) c.detach_importance = j["detach_importance"].get<bool>();
    if (j.contains("normalize_targets")) c.normalize_targets = j["normalize_targets"].get<bool>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    c.validate();
    return c;
}

std::string ModelConfig::to_json() const {
    json j{{"d", d},
           {"k", k},
           {"tau1", tau1},
           {"tau2", tau2},
           {"tau3", tau3},
           {"use_srm", use_srm},
           {"use_irm", use_irm},
           {"use_global_loss", use_global_loss},
           {"use_local_loss", use_local_loss},
           {"detach_importance", detach_importance},
           {"normalize_targets", normalize_targets},
           {"seed", seed}};
    return j.dump(2);
}

namespace {

void fill_uniform(Matrix& m, double scale, Xoshiro256pp& rng) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform_range(-scale, scale);
}

}  // namespace

Model::Model(const ModelConfig& config, int input_dim)
    : cfg(config),
      d_in(input_dim),
      p_img("p_img", Matrix(config.d, input_dim)),
      p_txt("p_txt", Matrix(config.d, input_dim)),
      srm{Param("f_x", Matrix(config.k, config.k)), Param("f_y", Matrix(config.k, config.k))},
      irm{Param("g_weights", Matrix(1, config.k)), Param("g_bias", Matrix(1, 1))} {
    cfg.validate();
    if (d_in < 1) throw ConfigError("Model: d_in must be >= 1");
    Xoshiro256pp rng(stream_seed(cfg.seed, "init"));
    const double proj_scale = 1.0 / std::sqrt(static_cast<double>(d_in));
    const double head_scale = 1.0 / std::sqrt(static_cast<double>(cfg.k));
    fill_uniform(p_img.value, proj_scale, rng);
    fill_uniform(p_txt.value, proj_scale, rng);
    fill_uniform(srm.f_x.value, head_scale, rng);
    fill_uniform(srm.f_y.value, head_scale, rng);
    fill_uniform(irm.g_weights.value, head_scale, rng);
    // g_bias stays zero
}

std::vector<Param*> Model::params() {
    return {&p_img, &p_txt, &srm.f_x, &srm.f_y, &irm.g_weights, &irm.g_bias};
}

std::vector<const Param*> Model::params() const {
    return {&p_img, &p_txt, &srm.f_x, &srm.f_y, &irm.g_weights, &irm.g_bias};
}

ScoreMatrices pair_score_matrix(Tape& tape, std::span<const TokenPair> batch, Model& model) {
    if (batch.empty()) throw ContractError("pair_score_matrix: empty batch");
    const int b = static_cast<int>(batch.size());
    for (const TokenPair& p : batch) {
        if (p.image_tokens.rows() != model.d_in || p.text_tokens.rows() != model.d_in) {
            throw DimensionError("pair_score_matrix: pair '" + p.id + "' token dim " +
                                 std::to_string(p.image_tokens.rows()) + " vs model d_in " +
                                 std::to_string(model.d_in));
        }
        if (!p.image_tokens.same_shape(batch[0].image_tokens) ||
            !p.text_tokens.same_shape(batch[0].text_tokens)) {
            throw DimensionError("pair_score_matrix: inconsistent token shapes across the batch");
        }
    }

    struct ImageNodes {
        Value I_l, I_g;
    };
    struct TextNodes {
        Value T_l, T_g, omega;
    };
    std::vector<ImageNodes> images(b);
    std::vector<TextNodes> texts(b);
    Value img_proj = tape.param(model.p_img);
    Value txt_proj = tape.param(model.p_txt);
    for (int p = 0; p < b; ++p) {
        images[p].I_l = tape.matmul(img_proj, tape.constant(batch[p].image_tokens));
        images[p].I_g = tape.col_mean(images[p].I_l);
    }
    for (int q = 0; q < b; ++q) {
        texts[q].T_l = tape.matmul(txt_proj, tape.constant(batch[q].text_tokens));
        texts[q].T_g = tape.col_sum(texts[q].T_l);
        if (model.cfg.use_irm) {
            if (model.cfg.detach_importance) {
                Matrix raw = matmul_tn(tape.value(texts[q].T_l), tape.value(texts[q].T_g));
                texts[q].omega = tape.constant(softmax_cols(raw, model.cfg.tau2));
            } else {
                texts[q].omega =
                    importance_weights(tape, texts[q].T_l, texts[q].T_g, model.cfg.tau2);
            }
        }
    }

    std::vector<std::vector<Value>> grid_g(b, std::vector<Value>(b));
    std::vector<std::vector<Value>> grid_l(b, std::vector<Value>(b));
    for (int p = 0; p < b; ++p) {
        for (int q = 0; q < b; ++q) {
            Value V = cross_attend(tape, images[p].I_l, texts[q].T_l, model.cfg.tau1);
            Value S_local = tape.block_cosine_cols(texts[q].T_l, V, model.cfg.k);
            Value s_g = tape.block_cosine_cols(texts[q].T_g, images[p].I_g, model.cfg.k);
            Value S_enh = model.cfg.use_srm ? srm_enhance(tape, S_local, model.srm) : S_local;
            Value local = model.cfg.use_irm
                              ? aggregate_local(tape, S_enh, texts[q].omega, model.irm)
                              : score_global(tape, tape.col_mean(S_enh), model.irm);
            grid_g[p][q] = score_global(tape, s_g, model.irm);
            grid_l[p][q] = local;
        }
    }
    return ScoreMatrices{tape.stack_scalars(grid_g), tape.stack_scalars(grid_l)};
}

Scorer::ImageEmb Scorer::embed_image(const Matrix& tokens) const {
    if (tokens.rows() != m_.d_in) {
        throw DimensionError("Scorer: image token dim " + std::to_string(tokens.rows()) +
                             " vs model d_in " + std::to_string(m_.d_in));
    }
    ImageEmb e;
    e.I_l = matmul(m_.p_img.value, tokens);
    e.I_g = col_mean(e.I_l);
    return e;
}

Scorer::TextEmb Scorer::embed_text(const Matrix& tokens) const {
    if (tokens.rows() != m_.d_in) {
        throw DimensionError("Scorer: text token dim " + std::to_string(tokens.rows()) +
                             " vs model d_in " + std::to_string(m_.d_in));
    }
    TextEmb e;
    e.T_l = matmul(m_.p_txt.value, tokens);
    e.T_g = col_sum(e.T_l);
    e.omega = softmax_cols(matmul_tn(e.T_l, e.T_g), m_.cfg.tau2);
    return e;
}

Scorer::Details Scorer::score_with_details(const ImageEmb& img, const TextEmb& txt) const {
    Details d;
    Matrix scores = matmul_tn(img.I_l, txt.T_l);
    d.attention = softmax_cols(scores, m_.cfg.tau1);
    Matrix V = matmul(img.I_l, d.attention);
    d.S_local = block_cosine_cols(txt.T_l, V, m_.cfg.k);
    if (m_.cfg.use_srm) {
        Matrix src = matmul(m_.srm.f_x.value, d.S_local);
        Matrix dst = matmul(m_.srm.f_y.value, d.S_local);
        d.edges = softmax_cols(matmul_tn(src, dst), 1.0);
        d.S_enhanced = matmul(src, d.edges);
    } else {
        const int n = d.S_local.cols();
        d.edges = Matrix::identity(n);
        d.S_enhanced = d.S_local;
    }
    d.omega = txt.omega;

    Matrix pooled = m_.cfg.use_irm ? matmul(d.S_enhanced, txt.omega) : col_mean(d.S_enhanced);
    const Matrix& g = m_.irm.g_weights.value;
    const double bias = m_.irm.g_bias.value(0, 0);
    double local = bias;
    for (int i = 0; i < g.cols(); ++i) local += g(0, i) * pooled(i, 0);

    Matrix s_g = block_cosine_cols(txt.T_g, img.I_g, m_.cfg.k);
    double global = bias;
    for (int i = 0; i < g.cols(); ++i) global += g(0, i) * s_g(i, 0);

    d.score = ScorePair{global, local};
    return d;
}

ScorePair Scorer::score(const ImageEmb& img, const TextEmb& txt) const {
    return score_with_details(img, txt).score;
}

}  // namespace relmatch
