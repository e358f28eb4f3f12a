#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pidinet {

// Shape violations: mismatched tensors, impossible output geometry.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid argument values: non-positive stride, zero target size, wrong kind.
struct ParameterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Architecture-string syntax error; carries the offending byte position.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"),
          position(pos) {}
    std::size_t position;
};

// Configuration-level violations: wrong block count, M >= C.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Model-file problems.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CorruptionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dataset problems: empty directories, unreadable or unpaired files.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Optimizer refusing a step (non-finite gradients); names the parameter block.
struct NonFiniteGradientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pidinet
