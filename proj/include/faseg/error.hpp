#pragma once

#include <stdexcept>
#include <string>

namespace faseg {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operand shapes are incompatible; the message carries both shapes.
struct ShapeError : Error {
  using Error::Error;
};

// A size or count argument is outside its documented range.
struct ParamError : Error {
  using Error::Error;
};

// softmax_rows saw a row whose entries are all -inf.
struct DegenerateRowError : Error {
  using Error::Error;
};

// A pixel index fell outside its grid.
struct IndexError : Error {
  using Error::Error;
};

// The finite-difference oracle hit a non-finite function value.
struct OracleError : Error {
  using Error::Error;
};

// A recorded tape node has no backward rule.
struct UnsupportedOpError : Error {
  using Error::Error;
};

// Invalid run configuration.
struct ConfigError : Error {
  using Error::Error;
};

// Filesystem failure in the CLI layer.
struct IoError : Error {
  using Error::Error;
};

}  // namespace faseg
