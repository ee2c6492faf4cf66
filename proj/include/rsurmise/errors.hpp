#pragma once

#include <stdexcept>
#include <string>

namespace rsurmise {

/// Invalid input: bad parameters, malformed files, unsatisfied preconditions.
/// The CLI maps these to exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed on valid input. The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParams : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};
class InvalidHistogram : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};
class TooFewLevels : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};
class EmptySector : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};
class DegenerateParameters : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};
class OutOfRange : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};
class NoBracket : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class SingularSystem : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class SymmetryViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace rsurmise
