#pragma once

#include <stdexcept>
#include <string>

namespace rkhs_sparse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad caller input: shape mismatch, out-of-range index, label convention
/// violation, malformed file. Maps to CLI exit code 1.
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// The numerics could not produce a usable answer (degenerate bandwidth,
/// diverged solver, no stable selection). Maps to CLI exit code 2.
class NumericalError : public Error {
  public:
    using Error::Error;
};

class DegenerateBandwidth : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

}  // namespace rkhs_sparse
