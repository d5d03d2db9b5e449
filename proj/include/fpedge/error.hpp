#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fpedge {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, int iterations, double residual)
      : Error(what + " (iterations=" + std::to_string(iterations) +
              ", residual=" + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class BracketNotFound : public Error {
 public:
  using Error::Error;
};

class FitUnstable : public Error {
 public:
  using Error::Error;
};

class Degenerate : public Error {
 public:
  using Error::Error;
};

/// Dense eigensolver failure; carries the seed of the offending sample.
class EigensolverError : public Error {
 public:
  EigensolverError(const std::string& what, std::uint64_t seed, std::uint64_t stream)
      : Error(what + " (seed=" + std::to_string(seed) + ", stream=" + std::to_string(stream) + ")"),
        seed_(seed),
        stream_(stream) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fpedge
