#pragma once

#include <exception>
#include <stdexcept>
#include <string>

namespace divscale {

// Root of the library's exception hierarchy. Every error raised by divscale
// derives from this, so callers can catch one type at the boundary.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shapes of two operands disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A parameter is outside its documented domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Cosine similarity of two all-zero vectors.
class UndefinedSimilarity : public Error {
public:
    using Error::Error;
};

// Series too short for the requested decomposition/window.
class InsufficientLength : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// Backend asked for something its descriptor does not declare.
class CapabilityError : public Error {
public:
    using Error::Error;
};

// Backend produced an unusable result or reported an internal failure.
class BackendError : public Error {
public:
    using Error::Error;
};

// Malformed or unexpected protocol traffic (including version mismatch).
class ProtocolError : public BackendError {
public:
    using BackendError::BackendError;
};

// The child process went away or the pipe broke.
class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};

class DatasetError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Proposition-style preconditions (support inclusion etc.).
class AssumptionError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// Rethrows `e` as the same divscale error category with "context: " prefixed
// to the message. Non-divscale exceptions are rethrown untouched.
[[noreturn]] void rethrow_with_context(std::exception_ptr e, const std::string& context);

}  // namespace divscale
