#pragma once

#include <stdexcept>
#include <string>

namespace rkmp {

// Base class for every error raised by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionError : Error {
  using Error::Error;
};

// Iterative kernel exhausted its sweep budget.
struct ConvergenceError : Error {
  using Error::Error;
};

struct NotPositiveDefiniteError : Error {
  using Error::Error;
};

struct NotPsdError : Error {
  using Error::Error;
};

struct InsufficientSamplesError : Error {
  using Error::Error;
};

// Training loss became non-finite.
struct DivergenceError : Error {
  using Error::Error;
};

// Simulation produced non-finite state.
struct InstabilityError : Error {
  using Error::Error;
};

// A caller violated an operation precondition (missing mean, wrong kind, ...).
struct ContractError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace rkmp
