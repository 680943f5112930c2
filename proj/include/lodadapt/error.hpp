#pragma once

#include <stdexcept>
#include <string>

namespace lodadapt {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid mesh, config, or rank-deficient constraint setup.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A factorization or eigensolve failed.
class SolverError : public Error {
public:
  using Error::Error;
};

/// Requested data is missing (incomplete store, correctors discarded, ...).
class StateError : public Error {
public:
  using Error::Error;
};

} // namespace lodadapt
