#pragma once

#include <stdexcept>
#include <string>

namespace vmix {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid numeric parameter (nonpositive stiffness, empty mesh, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// Factorization or estimator failure.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// The implicit memory term would make a block scaling vanish or flip sign.
class StabilityGateError : public Error {
 public:
  using Error::Error;
};

/// A reference-solution oracle could not reach its quality gate.
class OracleError : public Error {
 public:
  using Error::Error;
};

/// History summation requested in a mode the buffer cannot serve.
class ModeError : public Error {
 public:
  using Error::Error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vmix
