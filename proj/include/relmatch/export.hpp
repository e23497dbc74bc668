#pragma once

#include <filesystem>
#include <string>

#include "relmatch/corpus.hpp"
#include "relmatch/model.hpp"

namespace relmatch {

struct ExportOptions {
    bool srm_graph = false;
    bool irm_weights = false;
};

/// Writes the M cross-attention weights of one word against a pair's image as
///   <prefix>.attn.csv  raw weights, one row summing to 1
///   <prefix>.attn.pgm  8-bit grayscale, min-max normalized, on the patch grid
/// plus <prefix>.srm.csv (edge matrix) and <prefix>.irm.csv (importance weights)
/// when requested.
void export_attention(const Model& model, const Corpus& corpus, const std::string& pair_id,
                      int word_index, const std::filesystem::path& out_prefix,
                      const ExportOptions& opts = {});

void write_csv(const Matrix& m, const std::filesystem::path& path);

/// Min-max normalizes values to [0,1] and emits a binary (P5) PGM. A constant
/// input maps to mid-gray. M patches form a sqrt(M) x sqrt(M) grid when M is a
/// perfect square, one row otherwise.
void write_pgm(const std::vector<double>& values, const std::filesystem::path& path);

}  // namespace relmatch
