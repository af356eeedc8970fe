#pragma once

#include <stdexcept>
#include <string>

namespace phlim {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Incompatible or malformed arguments (grid mismatch, bad shapes).
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Mathematically invalid input, e.g. |j| > l.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Request exceeds a configured capability limit.
class CapabilityError : public Error {
public:
  using Error::Error;
};

/// Grid does not cover the state (tail mass outside, aliasing).
class CoverageError : public Error {
public:
  using Error::Error;
};

/// State degenerated (zero norm, vanishing mass).
class DegenerateStateError : public Error {
public:
  using Error::Error;
};

/// Caller violated an operation precondition (e.g. unnormalized input).
class ContractError : public Error {
public:
  using Error::Error;
};

/// Input too ill-conditioned for the requested numerical operation.
class ConditioningError : public Error {
public:
  using Error::Error;
};

/// Time window does not contain the packet transit.
class WindowError : public Error {
public:
  using Error::Error;
};

/// Arrival-time ordering violated or unresolvable.
class OrderingError : public Error {
public:
  using Error::Error;
};

} // namespace phlim
