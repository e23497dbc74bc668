#include "relmatch/train.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "relmatch/errors.hpp"
#include "relmatch/objective.hpp"

namespace relmatch {

using nlohmann::json;

void TrainConfig::validate() const {
    if (steps < 1) throw ConfigError("TrainConfig: steps must be >= 1");
    if (warmup_steps < 1 || warmup_steps > steps) {
        throw ConfigError("TrainConfig: warmup_steps must be in [1, steps]");
    }
    if (batch_size < 2) {
        throw ConfigError("TrainConfig: batch_size must be >= 2 for the contrastive loss");
    }
    if (!(learning_rate > 0.0)) throw ConfigError("TrainConfig: learning_rate must be > 0");
    if (weight_decay < 0.0) throw ConfigError("TrainConfig: weight_decay must be >= 0");
}

TrainConfig TrainConfig::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("TrainConfig: cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

TrainConfig TrainConfig::from_json_text(const std::string& text) {
    json j = json::parse(text);
    TrainConfig c;
    if (j.contains("steps")) c.steps = j["steps"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("warmup_steps")) c.warmup_steps = j["warmup_steps"].get<int>();
    if (j.contains("checkpoint_path")) c.checkpoint_path = j["checkpoint_path"].get<std::string>();
    if (j.contains("log_path")) c.log_path = j["log_path"].get<std::string>();
    c.validate();
    return c;
}

std::string TrainConfig::to_json() const {
    json j{{"steps", steps},
           {"batch_size", batch_size},
           {"learning_rate", learning_rate},
           {"weight_decay", weight_decay},
           {"warmup_steps", warmup_steps},
           {"checkpoint_path", checkpoint_path},
           {"log_path", log_path}};
    return j.dump(2);
}

double lr_at(const TrainConfig& cfg, int step) {
    if (step <= cfg.warmup_steps) {
        return cfg.learning_rate * static_cast<double>(step) / cfg.warmup_steps;
    }
    const double progress =
        static_cast<double>(step - cfg.warmup_steps) / (cfg.steps - cfg.warmup_steps);
    return cfg.learning_rate * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

void AdamW::init(std::span<Param* const> params) {
    t = 0;
    m.clear();
    v.clear();
    for (const Param* p : params) {
        m.emplace_back(p->value.rows(), p->value.cols());
        v.emplace_back(p->value.rows(), p->value.cols());
    }
}

void AdamW::step(std::span<Param* const> params, double lr, double weight_decay) {
    if (m.size() != params.size()) throw UsageError("AdamW: not initialized for these params");
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Param& p = *params[i];
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad.data()[j];
            double& mj = m[i].data()[j];
            double& vj = v[i].data()[j];
            mj = beta1 * mj + (1.0 - beta1) * g;
            vj = beta2 * vj + (1.0 - beta2) * g * g;
            const double mhat = mj / bc1;
            const double vhat = vj / bc2;
            p.value.data()[j] -=
                lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p.value.data()[j]);
        }
    }
}

TrainState::TrainState(const ModelConfig& cfg, int d_in)
    : model(cfg, d_in), batch_rng(stream_seed(cfg.seed, "batches")) {
    opt.init(model.params());
}

void train_steps(TrainState& state, const TrainConfig& cfg, const Corpus& corpus, int until_step,
                 std::ostream* log) {
    cfg.validate();
    const std::vector<int> train_idx = corpus.split_indices("train");
    if (static_cast<int>(train_idx.size()) < cfg.batch_size) {
        throw ContractError("train: corpus has " + std::to_string(train_idx.size()) +
                            " training pairs, need at least batch_size=" +
                            std::to_string(cfg.batch_size));
    }
    const int last = until_step >= 0 ? until_step : cfg.steps;
    if (last > cfg.steps) throw UsageError("train: until_step exceeds cfg.steps");

    auto params = state.model.params();
    for (int s = state.step + 1; s <= last; ++s) {
        const double lr = lr_at(cfg, s);

        std::vector<int> batch_idx(cfg.batch_size);
        for (int i = 0; i < cfg.batch_size; ++i) {
            batch_idx[i] = train_idx[state.batch_rng.uniform_int(train_idx.size())];
        }
        const std::vector<TokenPair> batch = corpus.load_batch(batch_idx);

        std::vector<std::vector<int>> labels;
        labels.reserve(batch.size());
        for (const TokenPair& p : batch) labels.push_back(p.label);

        Tape tape;
        ScoreMatrices scores = pair_score_matrix(tape, batch, state.model);
        LossOptions lo{state.model.cfg.tau3, state.model.cfg.use_global_loss,
                       state.model.cfg.use_local_loss, state.model.cfg.normalize_targets};
        LossTerms loss = contrastive_loss(tape, scores.global, scores.local,
                                          soft_targets(labels), lo);
        const double loss_value = tape.scalar(loss.total);
        if (!std::isfinite(loss_value)) {
            throw ContractError("train: non-finite loss at step " + std::to_string(s));
        }

        for (Param* p : params) p->reset_grad();
        tape.backward(loss.total);
        state.opt.step(params, lr, cfg.weight_decay);
        state.step = s;

        if (log) {
            json rec{{"step", s},
                     {"lr", lr},
                     {"loss", loss_value},
                     {"loss_global", tape.scalar(loss.global_term)},
                     {"loss_local", tape.scalar(loss.local_term)}};
            *log << rec.dump() << "\n";
        }
    }
}

namespace {

constexpr char kCkptMagic[4] = {'R', 'M', 'C', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_tensor(std::string& buf, const std::string& name, const Matrix& m) {
    put_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf.append(name);
    put_u32(buf, static_cast<std::uint32_t>(m.rows()));
    put_u32(buf, static_cast<std::uint32_t>(m.cols()));
    for (std::size_t i = 0; i < m.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &m.data()[i], 8);
        put_u64(buf, bits);
    }
}

struct Reader {
    const std::string& buf;
    std::size_t off = 0;

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + i])) << (8 * i);
        }
        off += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[off + i])) << (8 * i);
        }
        off += 8;
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s = buf.substr(off, n);
        off += n;
        return s;
    }
    Matrix tensor() {
        const std::uint32_t rows = u32();
        const std::uint32_t cols = u32();
        Matrix m(static_cast<int>(rows), static_cast<int>(cols));
        for (std::size_t i = 0; i < m.size(); ++i) {
            const std::uint64_t bits = u64();
            std::memcpy(&m.data()[i], &bits, 8);
        }
        return m;
    }
    void need(std::size_t n) {
        if (off + n > buf.size()) throw FormatError("checkpoint: truncated", off);
    }
};

}  // namespace

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
    json meta{{"format", "relmatch-checkpoint-v1"},
              {"model", json::parse(state.model.cfg.to_json())},
              {"d_in", state.model.d_in},
              {"step", state.step},
              {"adam_t", state.opt.t},
              {"rng_state", state.batch_rng.state()}};
    const std::string meta_text = meta.dump();

    std::string buf;
    buf.append(kCkptMagic, 4);
    put_u32(buf, static_cast<std::uint32_t>(meta_text.size()));
    buf.append(meta_text);

    const auto params = state.model.params();
    put_u32(buf, static_cast<std::uint32_t>(params.size() * 3));
    for (const Param* p : params) put_tensor(buf, p->name, p->value);
    for (std::size_t i = 0; i < params.size(); ++i) {
        put_tensor(buf, "adam.m." + params[i]->name, state.opt.m[i]);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        put_tensor(buf, "adam.v." + params[i]->name, state.opt.v[i]);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("save_checkpoint: cannot open " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("save_checkpoint: short write to " + path.string());
}

TrainState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_checkpoint: cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 4 || std::memcmp(buf.data(), kCkptMagic, 4) != 0) {
        throw FormatError("load_checkpoint: bad magic in " + path.string(), 0);
    }

    Reader r{buf, 4};
    const std::uint32_t meta_len = r.u32();
    const json meta = json::parse(r.str(meta_len));
    if (meta.at("format").get<std::string>() != "relmatch-checkpoint-v1") {
        throw FormatError("load_checkpoint: unknown format", 8);
    }

    const ModelConfig cfg = ModelConfig::from_json_text(meta.at("model").dump());
    TrainState state(cfg, meta.at("d_in").get<int>());
    state.step = meta.at("step").get<int>();
    state.opt.t = meta.at("adam_t").get<int>();
    const auto rng = meta.at("rng_state").get<std::array<std::uint64_t, 4>>();
    state.batch_rng = Xoshiro256pp::from_state(rng);

    const std::uint32_t n_tensors = r.u32();
    auto params = state.model.params();
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const std::uint32_t name_len = r.u32();
        const std::string name = r.str(name_len);
        Matrix m = r.tensor();
        bool found = false;
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            if (name == params[pi]->name) {
                params[pi]->value = std::move(m);
                found = true;
            } else if (name == "adam.m." + params[pi]->name) {
                state.opt.m[pi] = std::move(m);
                found = true;
            } else if (name == "adam.v." + params[pi]->name) {
                state.opt.v[pi] = std::move(m);
                found = true;
            }
            if (found) break;
        }
        if (!found) {
            throw FormatError("load_checkpoint: unknown tensor '" + name + "'", r.off);
        }
    }
    return state;
}

}  // namespace relmatch
