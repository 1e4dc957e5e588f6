#pragma once

#include <stdexcept>
#include <string>

namespace moblur {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated precondition or malformed data passed to an operation.
class ContractError : public Error {
public:
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Not enough data to estimate the requested quantity.
class InsufficientDataError : public ContractError {
public:
    explicit InsufficientDataError(const std::string& msg) : ContractError(msg) {}
};

// Bad user-facing configuration (CLI flags, config file).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// File system and codec failures.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Iterative solver divergence and similar numeric failures.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractError(msg);
}

}  // namespace moblur
