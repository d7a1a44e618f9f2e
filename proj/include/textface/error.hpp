#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace textface {

// Coarse failure categories. The CLI prints the category name as the
// machine-readable prefix of its one-line error message.
enum class ErrorKind {
  InvalidInput,
  EncoderUnavailable,
  ExpertNotReady,
  ProviderUnavailable,
  InsufficientData,
  NonFinite,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::EncoderUnavailable: return "encoder-unavailable";
    case ErrorKind::ExpertNotReady: return "expert-not-ready";
    case ErrorKind::ProviderUnavailable: return "provider-unavailable";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, const std::string& message,
                    ErrorKind kind = ErrorKind::InvalidInput) {
  if (!condition) throw Error(kind, message);
}

}  // namespace textface
