#pragma once

#include <stdexcept>
#include <string>

namespace psyeval {

/// Broad failure classes; the CLI maps them onto process exit codes.
enum class ErrorKind {
    Validation,     // malformed input, failed invariant, bad configuration
    NotFound,
    Endpoint,       // transport failure after retries, fixture gaps
    IncompleteRun,  // failed or missing trials block scoring
    Classification,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed structured input. `location` is "line N" or a field path.
class ParseError : public Error {
public:
    ParseError(const std::string& origin, const std::string& location, const std::string& what)
        : Error(ErrorKind::Validation, origin + ": " + location + ": " + what),
          location_(location) {}

    [[nodiscard]] const std::string& location() const noexcept { return location_; }

private:
    std::string location_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message) : Error(ErrorKind::Validation, message) {}
};

class NotFoundError : public Error {
public:
    explicit NotFoundError(const std::string& message) : Error(ErrorKind::NotFound, message) {}
};

class InvalidChoiceError : public Error {
public:
    explicit InvalidChoiceError(const std::string& message)
        : Error(ErrorKind::Validation, message) {}
};

class RenderError : public Error {
public:
    explicit RenderError(const std::string& message) : Error(ErrorKind::Validation, message) {}
};

class EndpointError : public Error {
public:
    explicit EndpointError(const std::string& message) : Error(ErrorKind::Endpoint, message) {}
};

class FixtureGapError : public Error {
public:
    explicit FixtureGapError(const std::string& message) : Error(ErrorKind::Endpoint, message) {}
};

class IncompleteRunError : public Error {
public:
    explicit IncompleteRunError(const std::string& message)
        : Error(ErrorKind::IncompleteRun, message) {}
};

class ClassificationError : public Error {
public:
    explicit ClassificationError(const std::string& message)
        : Error(ErrorKind::Classification, message) {}
};

/// A caller broke a documented precondition. Programming error, not bad data.
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& message) : std::logic_error(message) {}
};

}  // namespace psyeval
