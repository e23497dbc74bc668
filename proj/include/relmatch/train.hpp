#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

#include "relmatch/corpus.hpp"
#include "relmatch/model.hpp"
#include "relmatch/rng.hpp"

namespace relmatch {

struct TrainConfig {
    int steps = 2000;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double weight_decay = 0.01;
    int warmup_steps = 200;
    std::string checkpoint_path;
    std::string log_path;

    void validate() const;
    static TrainConfig from_json_file(const std::filesystem::path& path);
    static TrainConfig from_json_text(const std::string& text);
    std::string to_json() const;
};

/// Linear warmup to learning_rate, then cosine annealing to zero at the final
/// step. step is 1-based.
double lr_at(const TrainConfig& cfg, int step);

/// Decoupled weight decay Adam (beta1 0.9, beta2 0.999, eps 1e-8). Moment
/// buffers follow the model's parameter order.
struct AdamW {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int t = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;

    void init(std::span<Param* const> params);
    void step(std::span<Param* const> params, double lr, double weight_decay);
};

/// Everything the training trajectory depends on. Reloading a saved state and
/// continuing reproduces the uninterrupted run bit for bit.
struct TrainState {
    Model model;
    AdamW opt;
    Xoshiro256pp batch_rng;
    int step = 0;  // completed steps

    TrainState(const ModelConfig& cfg, int d_in);
};

/// Runs steps state.step+1 .. cfg.steps (or until_step if >= 0). Logs one JSONL
/// record per step when log is non-null. Requires at least batch_size training
/// pairs.
void train_steps(TrainState& state, const TrainConfig& cfg, const Corpus& corpus,
                 int until_step = -1, std::ostream* log = nullptr);

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace relmatch
