#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace relmatch {

// Shape disagreement between operands.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Out-of-range scalar argument (temperature, eps, ...).
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Invalid configuration (d not divisible by k, bad counts, ...).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A documented precondition on data was violated (all-zero label, short split, ...).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API misuse (seed not on tape, ...).
struct UsageError : std::logic_error {
    using std::logic_error::logic_error;
};

// Unknown id in a manifest lookup.
struct LookupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem failure; message names the file or pair id.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed binary payload; carries the byte offset of the defect.
struct FormatError : std::runtime_error {
    std::size_t offset;
    FormatError(const std::string& msg, std::size_t byte_offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
};

}  // namespace relmatch
