#pragma once

#include <stdexcept>
#include <string>

namespace pff {

// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// File exists but its content is not what we expect: unsupported format,
// bad magic, truncated payload, invariant violation on read.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical abort: non-finite loss or gradients during training.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pff
