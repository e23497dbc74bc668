#include "relmatch/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "relmatch/errors.hpp"
#include "relmatch/rng.hpp"

namespace relmatch {

namespace {

constexpr char kMagic[4] = {'R', 'M', 'T', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xFF));
    buf.push_back(static_cast<char>((v >> 8) & 0xFF));
    buf.push_back(static_cast<char>((v >> 16) & 0xFF));
    buf.push_back(static_cast<char>((v >> 24) & 0xFF));
}

std::uint32_t get_u32(const std::string& buf, std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 3])) << 24;
}

}  // namespace

void write_tensor(const Matrix& m, const std::filesystem::path& path) {
    if (!m.all_finite()) {
        throw ContractError("write_tensor: non-finite entries in " + m.shape_str() + " matrix");
    }
    std::string buf;
    buf.reserve(16 + m.size() * 4);
    buf.append(kMagic, 4);
    put_u32(buf, 2);
    put_u32(buf, static_cast<std::uint32_t>(m.rows()));
    put_u32(buf, static_cast<std::uint32_t>(m.cols()));
    for (std::size_t i = 0; i < m.size(); ++i) {
        const float f = static_cast<float>(m.data()[i]);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(buf, bits);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("write_tensor: cannot open " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write_tensor: short write to " + path.string());
}

Matrix read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_tensor: cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
        throw FormatError("read_tensor: bad magic in " + path.string(), 0);
    }
    if (buf.size() < 8) throw FormatError("read_tensor: truncated rank in " + path.string(), 4);
    const std::uint32_t rank = get_u32(buf, 4);
    if (rank != 2) {
        throw FormatError("read_tensor: unsupported rank " + std::to_string(rank) + " in " +
                              path.string(),
                          4);
    }
    if (buf.size() < 16) {
        throw FormatError("read_tensor: truncated dims in " + path.string(), buf.size());
    }
    const std::uint32_t rows = get_u32(buf, 8);
    const std::uint32_t cols = get_u32(buf, 12);
    const std::size_t need = 16 + static_cast<std::size_t>(rows) * cols * 4;
    if (buf.size() < need) {
        throw FormatError("read_tensor: truncated payload in " + path.string() + ", expected " +
                              std::to_string(need) + " bytes",
                          buf.size());
    }
    Matrix m(static_cast<int>(rows), static_cast<int>(cols));
    for (std::size_t i = 0; i < m.size(); ++i) {
        const std::uint32_t bits = get_u32(buf, 16 + i * 4);
        float f;
        std::memcpy(&f, &bits, 4);
        m.data()[i] = static_cast<double>(f);
    }
    return m;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("hash_file: cannot open " + path.string());
    std::uint64_t h = 0xCBF29CE484222325ULL;
    char chunk[4096];
    while (in.read(chunk, sizeof(chunk)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(chunk[i]);
            h *= 0x100000001B3ULL;
        }
    }
    return h;
}

}  // namespace relmatch
