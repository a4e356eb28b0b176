#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace leafsev {

// Malformed or truncated byte stream. Carries the offset at which decoding
// gave up so the caller can point at the bad input.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& msg, std::size_t byte_offset)
      : std::runtime_error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

// Recognizable container that this build does not handle (e.g. 16-bit PNG).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structured-text input violation (XML, CSV, JSON lines).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg, std::size_t line = 0)
      : std::runtime_error(line ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Statistics input with no usable variation (all values identical, pooled
// proportion of 0 or 1, ...).
class DegenerateDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace leafsev
