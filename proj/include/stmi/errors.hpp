#pragma once

#include <stdexcept>
#include <string>

namespace stmi {

// Base class for all library errors. `kind()` is the stable machine-readable
// category used by the CLI's one-line error output.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual const char* kind() const noexcept { return "error"; }
};

// Incompatible tensor shapes for an operation.
class DimensionError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "dimension"; }
};

// Image/mask/patch geometry that cannot be tiled or matched.
class GeometryError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "geometry"; }
};

// Non-finite values or degenerate numerical input (zero-norm rows, NaN logits).
class NumericError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "numeric"; }
};

// A caller broke an API contract (non-scalar loss, single-sample identity, ...).
class ContractError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "contract"; }
};

// Malformed serialized data (bad magic, truncation, dtype/rank mismatch).
class FormatError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "format"; }
};

// Invalid or inconsistent run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "config"; }
};

// Filesystem failures (open/read/write).
class IoError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "io"; }
};

} // namespace stmi
