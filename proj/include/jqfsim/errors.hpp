#pragma once

#include <stdexcept>
#include <string>

namespace jqfsim {

// Every failure raised by the library derives from Error so callers (the CLI,
// the Python bindings) can report a machine-readable kind alongside the text.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error("invalid-argument", what) {}
};

class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& what, double time = 0.0)
        : Error("numerical-failure", what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

class DegenerateSteadyState : public Error {
public:
    explicit DegenerateSteadyState(const std::string& what)
        : Error("degenerate-steady-state", what) {}
};

class TruncationFailure : public Error {
public:
    explicit TruncationFailure(const std::string& what) : Error("truncation-failure", what) {}
};

class FitFailure : public Error {
public:
    explicit FitFailure(const std::string& what) : Error("fit-failure", what) {}
};

class SamplingError : public Error {
public:
    explicit SamplingError(const std::string& what) : Error("sampling-error", what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config-error", what) {}
};

}  // namespace jqfsim
