#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fbh {

/// Base class for every error raised by the harness.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A state encoding that does not belong to the environment's state space.
class InvalidState : public Error {
 public:
  using Error::Error;
};

/// An action that is not legal in the given state.
class IllegalAction : public Error {
 public:
  using Error::Error;
};

/// The goal cannot be reached from a state (or from a config's start).
class Unsolvable : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration hit the configured state-space bound.
class BoundExceeded : public Error {
 public:
  BoundExceeded(const std::string& what, std::size_t count)
      : Error(what), count_(count) {}
  std::size_t count() const noexcept { return count_; }

 private:
  std::size_t count_;
};

/// Malformed environment config, run config, or template corpus.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A JSONL record that violates the snapshot/record schema.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::size_t line, std::string field)
      : Error(what), line_(line), field_(std::move(field)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// A remote endpoint could not be reached, or retries were exhausted.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace fbh
