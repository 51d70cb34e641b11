#pragma once

#include <stdexcept>
#include <string>

namespace gnfbc {

// Bad input: shape mismatches, malformed files, out-of-range labels.
// CLI maps this family to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class DimensionError : public ValidationError {
public:
    explicit DimensionError(const std::string& what) : ValidationError(what) {}
};

class FormatError : public ValidationError {
public:
    explicit FormatError(const std::string& what) : ValidationError(what) {}
};

// Numerical failure (non-finite loss, bias singularity). CLI exit code 2.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace gnfbc
