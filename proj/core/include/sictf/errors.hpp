#pragma once

#include <stdexcept>
#include <string>

namespace sictf {

// Bad invocation: unknown flag, missing argument, empty grid.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (parse failures, dimension
// mismatches, out-of-bounds ids).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure during optimization (non-finite objective,
// singular system without regularization).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sictf
