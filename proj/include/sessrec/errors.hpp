#pragma once

#include <stdexcept>
#include <string>

namespace sessrec {

// Base class for all library failures. The CLI maps subclasses onto exit
// codes: config/usage -> 2, data -> 3, numeric -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor shape mismatch (matmul inner extents, width mismatches, ...).
struct DimensionError : Error {
  using Error::Error;
};

// Empty or out-of-range normalization group in a grouped softmax.
struct GroupingError : Error {
  using Error::Error;
};

// Out-of-bounds gather/segment index.
struct IndexError : Error {
  using Error::Error;
};

// API misuse: non-scalar loss, double backward without reset, ...
struct ContractError : Error {
  using Error::Error;
};

// Invalid or contradictory configuration values.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed input file. Message carries the offending line number.
struct ParseError : Error {
  using Error::Error;
};

// Item index outside the model vocabulary.
struct VocabularyError : Error {
  using Error::Error;
};

// NaN/Inf where a finite value is required (divergence, bad scores).
struct NumericError : Error {
  using Error::Error;
};

// Evaluation over an empty test set or inconsistent metric inputs.
struct EvalError : Error {
  using Error::Error;
};

// File could not be opened/read/written or has a bad header.
struct IoError : Error {
  using Error::Error;
};

}  // namespace sessrec
