#pragma once

#include <stdexcept>
#include <string>

namespace vstyle {

// Base class for all library errors. Subclasses map onto CLI exit codes:
// config/shape/index problems -> 2, file problems -> 3, numeric blowups -> 4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor payload violates an invariant (NaN/Inf where finiteness is required).
class InvalidTensor : public Error {
public:
    using Error::Error;
};

// Operands have incompatible or unsupported dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A binary file is not a valid grid / mask / flow container.
class FormatError : public Error {
public:
    using Error::Error;
};

// Bad configuration value or an unsatisfiable parameter combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Frame, row, or token index out of range.
class IndexError : public Error {
public:
    using Error::Error;
};

// A referenced path does not exist or cannot be read/written.
class IoError : public Error {
public:
    using Error::Error;
};

// Divergent or non-finite values produced during iteration.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace vstyle
