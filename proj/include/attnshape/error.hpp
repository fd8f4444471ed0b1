#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace attnshape {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument to an operation (inverted bounds, zero width, unknown name...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input record. `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Input stream timestamps go backwards.
class OrderError : public Error {
 public:
  OrderError(std::uint64_t previous_id, std::uint64_t offending_id)
      : Error("timestamp order violation: dataset_id " +
              std::to_string(offending_id) + " is earlier than dataset_id " +
              std::to_string(previous_id)),
        previous_id_(previous_id),
        offending_id_(offending_id) {}
  std::uint64_t previous_id() const { return previous_id_; }
  std::uint64_t offending_id() const { return offending_id_; }

 private:
  std::uint64_t previous_id_;
  std::uint64_t offending_id_;
};

// Interval whose topical occurrences do not span two distinct posts.
class DegenerateIntervalError : public Error {
 public:
  using Error::Error;
};

// Interval below the minimum topical count in strict mode.
class ThresholdError : public Error {
 public:
  using Error::Error;
};

// Vector too short for the shape classifier.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

}  // namespace attnshape
