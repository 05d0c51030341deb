#pragma once
#include <stdexcept>
#include <string>

namespace gridmap {

// Malformed input text (arch JSON, kernel source, mapping artifacts).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& m) : std::runtime_error(m) {}
};

// Structurally valid input that violates a model rule (bad SPM placement,
// unknown identifier, non-affine subscript, ...).
struct SemanticError : std::runtime_error {
    explicit SemanticError(const std::string& m) : std::runtime_error(m) {}
};

// Runtime fault while executing a kernel or a mapped schedule
// (division by zero, subscript out of bounds).
struct EvalError : std::runtime_error {
    explicit EvalError(const std::string& m) : std::runtime_error(m) {}
};

} // namespace gridmap
