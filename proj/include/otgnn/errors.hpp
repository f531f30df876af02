#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace otgnn {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor/matrix shapes; message names both shapes.
struct ShapeError : Error {
    using Error::Error;
};

/// Invalid configuration or CLI usage (maps to exit code 1).
struct ConfigError : Error {
    using Error::Error;
};

/// SMILES or file syntax error; carries the character offset (or line).
struct ParseError : Error {
    std::size_t offset;
    ParseError(const std::string& msg, std::size_t off)
        : Error(msg + " (offset " + std::to_string(off) + ")"), offset(off) {}
};

/// Optimal-transport solver failure (non-finite costs, iteration cap, infeasible plan).
struct SolverError : Error {
    using Error::Error;
};

/// Dataset schema or IO problem.
struct DataError : Error {
    using Error::Error;
};

/// Training-time failure (non-finite loss/gradient), names the offending item.
struct TrainError : Error {
    using Error::Error;
};

/// Undefined metric (single-class AUC, zero-variance correlation).
struct MetricError : Error {
    using Error::Error;
};

}  // namespace otgnn
