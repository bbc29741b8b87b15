#pragma once
// Error taxonomy shared by all carl components. The CLI maps these to
// exit codes: ConfigError -> 1, DataError/ColdStartError -> 2,
// NumericFault/TrainingDiverged -> 3.

#include <stdexcept>
#include <string>

namespace carl {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration or usage (bad flag value, unknown variant, ...).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

/// Unreadable/malformed input data or a corrupted artifact.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error("data error: " + msg) {}
};

/// Lookup of a user/item that never appeared in training.
class ColdStartError : public Error {
public:
    explicit ColdStartError(const std::string& msg) : Error("cold-start error: " + msg) {}
};

/// Shape/dimension mismatch between arrays; names both shapes.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

/// NaN/Inf encountered; carries the name of the producing operation.
class NumericFault : public Error {
public:
    NumericFault(const std::string& op, const std::string& detail)
        : Error("numeric fault in op '" + op + "': " + detail), op_name(op) {}
    std::string op_name;
};

/// Training loss exploded past the divergence guard.
class TrainingDiverged : public Error {
public:
    explicit TrainingDiverged(const std::string& msg) : Error("training diverged: " + msg) {}
};

}  // namespace carl
