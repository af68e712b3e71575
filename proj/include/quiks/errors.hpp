#pragma once

#include <stdexcept>
#include <string>

namespace quiks {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientSamples : public Error {
public:
    using Error::Error;
};

class LagRangeExceeded : public Error {
public:
    using Error::Error;
};

class InvalidEpsilon : public Error {
public:
    using Error::Error;
};

class DegenerateDistribution : public Error {
public:
    using Error::Error;
};

class InvalidShape : public Error {
public:
    using Error::Error;
};

class EmptyProbe : public Error {
public:
    using Error::Error;
};

class Unreachable : public Error {
public:
    using Error::Error;
};

class InvalidDelayDistribution : public Error {
public:
    using Error::Error;
};

/// Raised while parsing or validating a scenario; `field()` names the offending key path.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace quiks
