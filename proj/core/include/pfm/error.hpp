#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pfm {

enum class ErrorKind {
  Load,              // missing file or directory, unreadable input
  Format,            // structurally invalid input (mixed resolutions, bad header)
  Parse,             // malformed text line
  InsufficientData,  // not enough frames / samples / classes
  DimensionMismatch,
  InvalidArgument,
  Stage,             // pipeline stage failure, message carries the stage tag
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Warnings go through a single sink so tests can count them.
void warn(const std::string& message);
std::size_t warning_count() noexcept;

}  // namespace pfm
