#pragma once

#include <stdexcept>
#include <string>

namespace bisr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or divisibility constraints violated.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A scalar argument is out of its admissible range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents (kernel text, manifest, blob, PNG).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Oracle refused to run at this size.
class SizeGuardError : public Error {
public:
    using Error::Error;
};

/// The regularized Gram system could not be factorized.
class SingularSystemError : public Error {
public:
    SingularSystemError(const std::string& what, double condition_estimate)
        : Error(what), condition_(condition_estimate) {}

    double condition_estimate() const noexcept { return condition_; }

private:
    double condition_;
};

}  // namespace bisr
