#pragma once

#include <stdexcept>
#include <string>

namespace coner {

// Malformed or inconsistent input data (bad JSONL line, dim mismatch, ...).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where finiteness is an invariant (loss blow-up, NaN feature).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Shape / configuration contract violations between caller and callee.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace coner
