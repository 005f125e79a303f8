#pragma once

#include <stdexcept>
#include <string>

namespace iclmine {

/// Base class for all pipeline failures. Each subclass maps to one CLI exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

/// Invalid configuration, missing required paths, out-of-range constants.
class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Transport failures, unfixtured mock prompts, malformed provider responses.
class BackendError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// Unreadable or malformed input data.
class DataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

}  // namespace iclmine
