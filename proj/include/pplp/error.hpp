#pragma once

#include <charconv>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace pplp
{

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Interval with lower bound above upper bound.
class InvalidInterval : public Error
{
public:
    InvalidInterval(double lo, double hi)
        : Error("invalid interval [" + std::to_string(lo) + ", " + std::to_string(hi) + "]")
    {
    }
};

/// A documented precondition of an operation was violated by the caller.
class ContractError : public Error
{
public:
    using Error::Error;
};

/// Input data cannot support the requested construction (too few points, constant data, ...).
class DegenerateInput : public Error
{
public:
    using Error::Error;
};

/// Syntax error while reading program text.
class ParseError : public Error
{
public:
    ParseError(const std::string& msg, std::size_t line, std::size_t column)
        : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg)
        , line_(line)
        , column_(column)
    {
    }

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Program is well-formed but meaningless (bad probability, invalid density, negative cycle, ...).
class SemanticError : public Error
{
public:
    using Error::Error;
};

/// A density piece whose guard leaves it unbounded.
class UnboundedPiece : public SemanticError
{
public:
    using SemanticError::SemanticError;
};

/// Grounding does not terminate or a clause is unsafe.
class GroundingError : public Error
{
public:
    using Error::Error;
};

/// The choice space exceeds the configured enumeration cap.
class InferenceRefusal : public Error
{
public:
    InferenceRefusal(double estimate, double cap)
        : Error("choice space of " + count(estimate) + " worlds exceeds cap " + count(cap))
        , estimate_(estimate)
    {
    }

    double estimate() const noexcept { return estimate_; }

private:
    static std::string count(double v)
    {
        char buf[32];
        const auto r = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, r.ptr);
    }

    double estimate_;
};

/// Evidence has probability zero.
class InconsistentEvidence : public Error
{
public:
    using Error::Error;
};

} // namespace pplp
