#include "relmatch/checks.hpp"

#include "relmatch/objective.hpp"
#include "relmatch/rng.hpp"

namespace relmatch {

std::vector<TokenPair> make_random_batch(std::uint64_t seed, int b, int d_in, int m_patches,
                                         int n_words, int z) {
    Xoshiro256pp rng(seed);
    std::vector<TokenPair> batch(b);
    for (int i = 0; i < b; ++i) {
        TokenPair& p = batch[i];
        p.id = "rand_" + std::to_string(i);
        p.image_tokens = Matrix(d_in, m_patches);
        p.text_tokens = Matrix(d_in, n_words);
        for (std::size_t j = 0; j < p.image_tokens.size(); ++j) {
            p.image_tokens.data()[j] = rng.gauss();
        }
        for (std::size_t j = 0; j < p.text_tokens.size(); ++j) {
            p.text_tokens.data()[j] = rng.gauss();
        }
        p.label.assign(z, 0);
        p.label[rng.uniform_int(z)] = 1;
        p.meta.class_index = static_cast<int>(
            std::find(p.label.begin(), p.label.end(), 1) - p.label.begin());
    }
    return batch;
}

GradCheckReport run_pipeline_grad_check(const PipelineCheckConfig& cfg) {
    ModelConfig mc;
    mc.d = cfg.d;
    mc.k = cfg.k;
    mc.seed = cfg.seed;
    Model model(mc, cfg.d_in);
    const std::vector<TokenPair> batch =
        make_random_batch(stream_seed(cfg.seed, "batch"), cfg.b, cfg.d_in, cfg.m_patches,
                          cfg.n_words, cfg.z);

    std::vector<std::vector<int>> labels;
    for (const TokenPair& p : batch) labels.push_back(p.label);
    const Matrix targets = soft_targets(labels);

    auto loss_fn = [&](bool with_grad) {
        Tape tape(with_grad);
        ScoreMatrices scores = pair_score_matrix(tape, batch, model);
        LossOptions lo{mc.tau3, true, true, mc.normalize_targets};
        LossTerms loss = contrastive_loss(tape, scores.global, scores.local, targets, lo);
        if (with_grad) tape.backward(loss.total);
        return tape.scalar(loss.total);
    };
    const auto params = model.params();
    return grad_check(loss_fn, params, cfg.eps);
}

namespace {

Matrix random_matrix(Xoshiro256pp& rng, int r, int c) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.gauss();
    return m;
}

GradCheckReport worst(GradCheckReport a, const GradCheckReport& b) {
    return b.max_rel_error > a.max_rel_error ? b : a;
}

}  // namespace

std::vector<std::pair<std::string, GradCheckReport>> run_primitive_grad_checks(std::uint64_t seed,
                                                                               int instances) {
    Xoshiro256pp rng(seed);
    std::vector<std::pair<std::string, GradCheckReport>> out;

    auto check_binary = [&](const std::string& name, auto op, int ar, int ac, int br, int bc) {
        GradCheckReport report;
        for (int i = 0; i < instances; ++i) {
            Param a("a", random_matrix(rng, ar, ac));
            Param b("b", random_matrix(rng, br, bc));
            std::vector<Param*> params{&a, &b};
            auto fn = [&](bool with_grad) {
                Tape tape(with_grad);
                Value r = tape.sum_all(op(tape, tape.param(a), tape.param(b)));
                if (with_grad) tape.backward(r);
                return tape.scalar(r);
            };
            report = worst(report, grad_check(fn, params, 1e-6));
        }
        out.emplace_back(name, report);
    };
    auto check_unary = [&](const std::string& name, auto op, int ar, int ac) {
        GradCheckReport report;
        for (int i = 0; i < instances; ++i) {
            Param a("a", random_matrix(rng, ar, ac));
            std::vector<Param*> params{&a};
            auto fn = [&](bool with_grad) {
                Tape tape(with_grad);
                Value r = tape.sum_all(op(tape, tape.param(a)));
                if (with_grad) tape.backward(r);
                return tape.scalar(r);
            };
            report = worst(report, grad_check(fn, params, 1e-6));
        }
        out.emplace_back(name, report);
    };

    check_binary("matmul", [](Tape& t, Value a, Value b) { return t.matmul(a, b); }, 3, 4, 4, 2);
    check_binary("matmul_tn", [](Tape& t, Value a, Value b) { return t.matmul_tn(a, b); }, 4, 3, 4,
                 2);
    check_binary("add", [](Tape& t, Value a, Value b) { return t.add(a, b); }, 3, 3, 3, 3);
    check_binary("block_cosine",
                 [](Tape& t, Value a, Value b) { return t.block_cosine_cols(a, b, 2); }, 6, 3, 6,
                 3);
    check_unary("transpose", [](Tape& t, Value a) { return t.transpose(a); }, 3, 4);
    check_unary("scale", [](Tape& t, Value a) { return t.scale(a, -1.75); }, 3, 4);
    check_unary("col_sum", [](Tape& t, Value a) { return t.col_sum(a); }, 3, 4);
    check_unary("col_mean", [](Tape& t, Value a) { return t.col_mean(a); }, 3, 4);
    check_unary("softmax_cols",
                [](Tape& t, Value a) { return t.softmax_cols(a, 1.3); }, 4, 3);

    {
        // weighted softmax output, otherwise the sum of each column is constant 1
        GradCheckReport report;
        for (int i = 0; i < instances; ++i) {
            Param a("a", random_matrix(rng, 4, 3));
            Matrix w = random_matrix(rng, 4, 3);
            std::vector<Param*> params{&a};
            auto fn = [&](bool with_grad) {
                Tape tape(with_grad);
                Value y = tape.softmax_cols(tape.param(a), 0.7);
                Value r = tape.sum_all(tape.matmul_tn(y, tape.constant(w)));
                if (with_grad) tape.backward(r);
                return tape.scalar(r);
            };
            report = worst(report, grad_check(fn, params, 1e-6));
        }
        out.emplace_back("softmax_cols(weighted)", report);
    }
    {
        GradCheckReport report;
        for (int i = 0; i < instances; ++i) {
            Param a("a", random_matrix(rng, 4, 4));
            Matrix t = random_matrix(rng, 4, 4);
            for (std::size_t j = 0; j < t.size(); ++j) t.data()[j] = std::fabs(t.data()[j]);
            std::vector<Param*> params{&a};
            auto fn = [&](bool with_grad) {
                Tape tape(with_grad);
                Value r = tape.soft_ce_cols(tape.param(a), t, 1.1);
                if (with_grad) tape.backward(r);
                return tape.scalar(r);
            };
            report = worst(report, grad_check(fn, params, 1e-6));
        }
        out.emplace_back("soft_ce_cols", report);
    }
    return out;
}

}  // namespace relmatch
