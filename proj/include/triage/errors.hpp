#pragma once

#include <stdexcept>
#include <string>

namespace triage {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV cell, JSON document, config line).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Structurally parsed input that violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Caller passed an out-of-range or otherwise unusable argument.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Dimensions of two operands do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Input is well-formed but carries no usable signal (e.g. all columns constant).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// A randomized generator could not satisfy its postcondition.
class GenerationError : public Error {
public:
    using Error::Error;
};

/// Aggregation could not produce a row (e.g. every cell of a technique diverged).
class SummarizationError : public Error {
public:
    using Error::Error;
};

} // namespace triage
