#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "relmatch/matrix.hpp"

namespace relmatch {

inline constexpr int kPromptVariants = 5;

/// Parameters of a synthetic paired corpus. Class index 0 is the reserved
/// "no-finding" class; classes 1..z-1 carry a latent disease signal. With
/// hard_negative on, classes 1..z-1 come in (disease, left)/(disease, right)
/// twins that share the disease latent and differ only in the location latent.
struct CorpusSpec {
    int z = 6;
    int M = 16;
    int N = 8;
    int d_in = 16;
    int n_train = 2000;
    int n_val = 200;
    int n_test = 1000;
    double noise_sigma = 1.0;
    bool hard_negative = false;
    std::uint64_t seed = 1;

    void validate() const;
    int diseases() const { return hard_negative ? (z - 1) / 2 : z - 1; }

    static CorpusSpec from_json_file(const std::filesystem::path& path);
    std::string to_json() const;
};

struct PairMeta {
    int class_index = 0;
    std::string location;     // "left" or "right"
    int disease_keyword = -1;  // word index carrying the disease latent, -1 if none
    int location_keyword = -1;
};

/// One image's patch-token matrix plus its paired report's word-token matrix.
struct TokenPair {
    std::string id;
    Matrix image_tokens;  // d_in x M
    Matrix text_tokens;   // d_in x N
    std::vector<int> label;  // multi-hot, length z, at least one set bit
    std::vector<int> signal_patches;
    PairMeta meta;
};

struct ManifestEntry {
    std::string id;
    std::string split;  // "train", "val", "test", or "prompt"
    std::vector<int> label;
    std::string image_file;  // relative to the corpus root
    std::string text_file;
    std::vector<int> signal_patches;
    PairMeta meta;
    int prompt_variant = -1;  // >= 0 for prompt entries
};

/// Writes {manifest.jsonl, tensors/, prompts/} under out_dir. Fully determined
/// by spec.seed; running twice yields byte-identical directories.
void generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir);

/// Read-only view over a generated corpus directory.
class Corpus {
public:
    static Corpus open(const std::filesystem::path& dir);

    const CorpusSpec& spec() const { return spec_; }
    const std::filesystem::path& dir() const { return dir_; }

    const std::vector<ManifestEntry>& entries() const { return entries_; }
    std::vector<int> split_indices(const std::string& split) const;
    const ManifestEntry& find(const std::string& id) const;

    TokenPair load(const ManifestEntry& entry) const;
    TokenPair load(int index) const;
    /// Pairs returned in the order of `indices`.
    std::vector<TokenPair> load_batch(std::span<const int> indices) const;

    /// Prompt pairs grouped by class index (classes 1..z-1), kPromptVariants each.
    std::map<int, std::vector<TokenPair>> load_prompts() const;

private:
    std::filesystem::path dir_;
    CorpusSpec spec_;
    std::vector<ManifestEntry> entries_;
    std::vector<ManifestEntry> prompts_;
};

}  // namespace relmatch
