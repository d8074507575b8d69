#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace aoicache {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument or a type invariant was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A radio configuration whose log-rate argument is <= 1.
class NonPositiveRate : public Error {
 public:
  NonPositiveRate(const std::string& parameter, const std::string& what)
      : Error(what), parameter_(parameter) {}

  // Name of the offending transmit-power field ("bs_tx_power" or
  // "source_tx_power").
  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

// The simulated FIFO queue grew past its configured cap.
class QueueDivergence : public Error {
 public:
  QueueDivergence(const std::string& what, std::size_t queue_length,
                  std::optional<std::size_t> replication = std::nullopt)
      : Error(what), queue_length_(queue_length), replication_(replication) {}

  std::size_t queue_length() const { return queue_length_; }
  // Set when raised from a replicated run.
  std::optional<std::size_t> replication() const { return replication_; }

 private:
  std::size_t queue_length_;
  std::optional<std::size_t> replication_;
};

class BracketFailure : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

// Scenario-file syntax or semantic error. line() is 1-based, 0 when the
// problem is not tied to a single line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace aoicache
