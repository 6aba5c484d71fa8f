#pragma once

#include <stdexcept>
#include <string>

namespace mtdnn {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: configuration/input/parse problems exit 2, numeric aborts exit 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or axis disagreement between tensors.
struct DimensionError : Error {
    using Error::Error;
};

// An id or position outside its valid range.
struct IndexError : Error {
    using Error::Error;
};

// NaN/Inf detected in a value or gradient buffer.
struct NumericError : Error {
    using Error::Error;
};

// A tensor was used with a graph it does not belong to.
struct GraphError : Error {
    using Error::Error;
};

// An API precondition was violated (e.g. non-scalar loss).
struct ContractError : Error {
    using Error::Error;
};

// Invalid configuration value or schema violation.
struct ConfigError : Error {
    using Error::Error;
};

// Invalid runtime input (empty sentence, bad label, ...).
struct InputError : Error {
    using Error::Error;
};

// Malformed file content; messages carry line numbers where known.
struct ParseError : Error {
    using Error::Error;
};

// Semantically inconsistent data (e.g. a ranking query without a positive).
struct ValidationError : Error {
    using Error::Error;
};

// Checkpoint file unreadable or incompatible with the model.
struct CheckpointError : Error {
    using Error::Error;
};

}  // namespace mtdnn
