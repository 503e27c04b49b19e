#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcmm {

enum class ErrorKind {
  kInvalidArgument,  // precondition on an operation's input violated
  kInput,            // unreadable or malformed input file
  kNumerical,        // a numerical stage could not produce a finite result
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed model or cloud file. `offset` is the byte position where
/// parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(ErrorKind::kInput,
              message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace pcmm
