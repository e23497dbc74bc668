#include "relmatch/export.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "relmatch/errors.hpp"

namespace relmatch {

void write_csv(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("write_csv: cannot open " + path.string());
    out.precision(17);
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (j) out << ",";
            out << m(i, j);
        }
        out << "\n";
    }
    if (!out) throw IoError("write_csv: short write to " + path.string());
}

void write_pgm(const std::vector<double>& values, const std::filesystem::path& path) {
    const int n = static_cast<int>(values.size());
    if (n == 0) throw ContractError("write_pgm: empty value list");
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    const int width = side * side == n ? side : n;
    const int height = side * side == n ? side : 1;

    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("write_pgm: cannot open " + path.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    for (double v : values) {
        const double norm = hi > lo ? (v - lo) / (hi - lo) : 0.5;
        out.put(static_cast<char>(std::lround(norm * 255.0)));
    }
    if (!out) throw IoError("write_pgm: short write to " + path.string());
}

void export_attention(const Model& model, const Corpus& corpus, const std::string& pair_id,
                      int word_index, const std::filesystem::path& out_prefix,
                      const ExportOptions& opts) {
    const ManifestEntry& entry = corpus.find(pair_id);
    const TokenPair pair = corpus.load(entry);
    if (word_index < 0 || word_index >= pair.text_tokens.cols()) {
        throw ParameterError("export_attention: word index " + std::to_string(word_index) +
                             " out of range for " + std::to_string(pair.text_tokens.cols()) +
                             " words");
    }

    Scorer scorer(model);
    const Scorer::Details d =
        scorer.score_with_details(scorer.embed_image(pair.image_tokens),
                                  scorer.embed_text(pair.text_tokens));

    const int m = d.attention.rows();
    Matrix weights(1, m);
    std::vector<double> column(m);
    for (int j = 0; j < m; ++j) {
        weights(0, j) = d.attention(j, word_index);
        column[j] = d.attention(j, word_index);
    }

    const std::string prefix = out_prefix.string();
    write_csv(weights, prefix + ".attn.csv");
    write_pgm(column, prefix + ".attn.pgm");
    if (opts.srm_graph) write_csv(d.edges, prefix + ".srm.csv");
    if (opts.irm_weights) write_csv(transpose(d.omega), prefix + ".irm.csv");
}

}  // namespace relmatch
