#pragma once

#include <stdexcept>
#include <string>

namespace dpl {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A value or configuration that violates a documented precondition
// (non-finite sample, q outside (0,1), t_c >= t_e, ...).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

// revert() refused because the model would drop below three samples.
class RevertGuardError : public Error {
public:
  using Error::Error;
};

// Root bracket does not enclose the target probability.
class BracketError : public Error {
public:
  using Error::Error;
};

// Iterative solver exhausted its iteration budget.
class NumericalError : public Error {
public:
  using Error::Error;
};

// Snapshot document is malformed, truncated or from another schema.
class SnapshotError : public Error {
public:
  using Error::Error;
};

// Input/output failure (unreadable file, write error).
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace dpl
