#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace oscar {

// Base for every error raised by the library. The CLI maps ValidationError
// to exit status 2 and everything else to 3.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

// Evaluation hit a singular point of a formula (e.g. 4eps^2 = 1).
class PoleError : public Error {
public:
    using Error::Error;
};

class IntegrationError : public Error {
public:
    using Error::Error;
};

// Fock truncation leaves a tail above the allowed bound.
class TruncationError : public Error {
public:
    using Error::Error;
};

// Population reached the top of a truncated Fock ladder.
class LeakageError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

}  // namespace oscar
