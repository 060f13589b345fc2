#pragma once

#include <stdexcept>
#include <string>

namespace cema {

// Binary op on two ParamVectors whose layouts differ.
class IncompatibleLayoutError : public std::invalid_argument {
public:
    explicit IncompatibleLayoutError(const std::string& what)
        : std::invalid_argument(what) {}
};

// Analytic formula hit a zero/non-finite denominator.
class DegenerateInputError : public std::domain_error {
public:
    explicit DegenerateInputError(const std::string& what)
        : std::domain_error(what) {}
};

// Bad run configuration (file contents, CLI flags, struct invariants).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what)
        : std::runtime_error(what) {}
};

// Numerical pathology during training (NaN/Inf loss). Aborts the run.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what)
        : std::runtime_error(what) {}
};

// Malformed input file (CSV matrix, checkpoint).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what)
        : std::runtime_error(what) {}
};

} // namespace cema
