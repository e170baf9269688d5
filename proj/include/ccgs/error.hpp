#pragma once

#include <stdexcept>
#include <string>

namespace ccgs {

/// Input data failed schema or invariant validation (bad corpus record,
/// malformed file, out-of-range span point).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Tensor operation received incompatible shapes. Message carries both shapes.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration file or override rejected (unknown key, bad value).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Corrupt or truncated binary artifact (checkpoint, feature file).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ccgs
