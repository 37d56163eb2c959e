#pragma once

#include <stdexcept>
#include <string>

namespace hypro {

// Error categories double as CLI exit codes.
enum class ErrorKind : int {
    kConfig = 2,
    kData = 3,
    kNumerical = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

/// A value lies outside its admissible interval.
class RangeError : public Error {
public:
    explicit RangeError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

/// A sequence is too short for the requested operation.
class LengthError : public Error {
public:
    explicit LengthError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

/// Event times are out of order relative to a query.
class OrderingError : public Error {
public:
    explicit OrderingError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

/// Persisted file is not in the expected format (bad magic, truncation, version).
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

/// Too few observations for a statistic.
class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

} // namespace hypro
