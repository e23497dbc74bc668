#pragma once

#include <cstdint>
#include <filesystem>

#include "relmatch/matrix.hpp"

namespace relmatch {

// "RMT1" tensor file: magic (4 bytes), rank u32 LE, dims u32 LE each, then the
// payload as 32-bit LE floats in row-major order. Matrices are rank 2.
void write_tensor(const Matrix& m, const std::filesystem::path& path);
Matrix read_tensor(const std::filesystem::path& path);

/// FNV-1a over a file's bytes; used by determinism checks.
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace relmatch
