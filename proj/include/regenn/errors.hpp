#pragma once

#include <stdexcept>
#include <string>

namespace regenn {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid usage: bad arguments, bad configuration, malformed variant tags.
/// Maps to CLI exit status 1.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Shape or dimension mismatch between tensors. Maps to CLI exit status 1.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Problems with input data: unreadable files, inconsistent dimensions,
/// unparseable numbers, corrupted tensor files. Maps to CLI exit status 2.
class DataError : public Error {
public:
    using Error::Error;
};

/// Numeric failure during optimization (non-finite loss). Exit status 3.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Operation requires the object to be in a state it is not in,
/// e.g. reading evolution weights from a model that never ran a forward pass.
class StateError : public Error {
public:
    using Error::Error;
};

} // namespace regenn
