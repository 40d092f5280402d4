#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rotbec {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver hit its iteration cap before meeting its tolerance.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, std::size_t iterations)
      : Error(what + " (no convergence after " + std::to_string(iterations) +
              " iterations)"),
        iterations_(iterations) {}
  std::size_t iterations() const { return iterations_; }

 private:
  std::size_t iterations_;
};

/// The trap does not confine particles at the requested rotation.
/// `witness` is a grid point (coordinates) where confinement fails.
class Unstable : public Error {
 public:
  Unstable(const std::string& what, std::vector<double> witness)
      : Error(what), witness_(std::move(witness)) {}
  const std::vector<double>& witness() const { return witness_; }

 private:
  std::vector<double> witness_;
};

class NotNormalized : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

class NotAxisymmetricTrap : public Error {
 public:
  using Error::Error;
};

class DimensionTooLarge : public Error {
 public:
  using Error::Error;
};

class NonFiniteScatteringLength : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rotbec
