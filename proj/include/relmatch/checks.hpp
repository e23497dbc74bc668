#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "relmatch/corpus.hpp"
#include "relmatch/grad_check.hpp"
#include "relmatch/model.hpp"

namespace relmatch {

/// Random token pairs for self-contained checks; labels are one-hot over z classes.
std::vector<TokenPair> make_random_batch(std::uint64_t seed, int b, int d_in, int m_patches,
                                         int n_words, int z);

struct PipelineCheckConfig {
    int b = 3;
    int d = 4;
    int k = 2;
    int m_patches = 2;
    int n_words = 2;
    int d_in = 3;
    int z = 3;
    double eps = 1e-5;
    std::uint64_t seed = 42;
};

/// Gradient of the full batch loss (all modules and both branches enabled)
/// against central differences over every model parameter.
GradCheckReport run_pipeline_grad_check(const PipelineCheckConfig& cfg = {});

/// Per-primitive checks on random instances; returns one report per primitive.
std::vector<std::pair<std::string, GradCheckReport>> run_primitive_grad_checks(
    std::uint64_t seed = 7, int instances = 10);

}  // namespace relmatch
