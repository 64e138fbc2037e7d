#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace changegpt {

enum class ErrorCode {
  OutOfBounds,
  BadClass,
  DimensionMismatch,
  BadFilter,
  BadImage,
  DuplicateName,
  EmptyRegistry,
  UnknownTool,
  BadInput,
  FixtureMissing,
  UnknownParent,
  UnknownImage,
  MalformedStep,
  ScriptExhausted,
  HttpError,
  Timeout,
  IoError,
  EmptyRequirement,
  EmptySet,
  NoDiscordantPairs,
  DatasetError,
  RemoteError,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library is reported as an Error carrying
/// a code, so callers (CLI, HTTP gateway) can map it to exit codes / statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by completion backends for non-2xx responses after retries.
class HttpStatusError : public Error {
 public:
  HttpStatusError(int status, std::string body)
      : Error(ErrorCode::HttpError,
              "HTTP " + std::to_string(status) + ": " + body),
        status_(status),
        body_(std::move(body)) {}

  [[nodiscard]] int status() const noexcept { return status_; }
  [[nodiscard]] const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

}  // namespace changegpt
