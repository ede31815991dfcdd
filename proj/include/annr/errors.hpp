#pragma once

#include <stdexcept>
#include <string>

namespace annr {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class DuplicatePoint : public Error {
public:
    using Error::Error;
};

class DegenerateSimplex : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Failure of the target function. `raw` holds the evaluator's raw reply when
/// there was one.
class EvaluationError : public Error {
public:
    explicit EvaluationError(const std::string& what, std::string raw = {})
        : Error(what), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

/// The candidate pool ran dry and fresh walks found nothing to query.
class StalledEngine : public Error {
public:
    using Error::Error;
};

}  // namespace annr
