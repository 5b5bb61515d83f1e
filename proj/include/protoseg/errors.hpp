#pragma once

#include <stdexcept>
#include <string>

namespace protoseg {

// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ZeroVectorError : Error {
    using Error::Error;
};

struct NonNormalizedError : Error {
    using Error::Error;
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct ShapeMismatchError : Error {
    using Error::Error;
};

struct InvalidShapeError : Error {
    using Error::Error;
};

struct ClassMismatchError : Error {
    using Error::Error;
};

struct InvalidKappaError : Error {
    using Error::Error;
};

struct NumericalOverflowError : Error {
    using Error::Error;
};

struct MissingAssignmentError : Error {
    using Error::Error;
};

struct StaleCacheError : Error {
    using Error::Error;
};

struct InvalidSpecError : Error {
    using Error::Error;
};

struct IoFailureError : Error {
    using Error::Error;
};

// Carries the 1-based line number of the offending input line (0 if unknown).
struct FormatError : Error {
    long line = 0;
    FormatError(const std::string& msg, long line_no) : Error(msg), line(line_no) {}
};

struct EmptySplitError : Error {
    using Error::Error;
};

// Raised by the trainer when a loss component turns NaN/Inf; names the component.
struct NumericalDivergenceError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace protoseg
