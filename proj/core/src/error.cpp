#include "pfm/error.hpp"

#include <atomic>

#include <spdlog/spdlog.h>

namespace pfm {

namespace {
std::atomic<std::size_t> g_warnings{0};
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Load: return "load error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Stage: return "stage error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void warn(const std::string& message) {
  ++g_warnings;
  spdlog::warn("{}", message);
}

std::size_t warning_count() noexcept { return g_warnings.load(); }

}  // namespace pfm
