#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace changegpt {

inline constexpr std::string_view kObservationStop = "Observation:";

struct CompletionRequest {
  std::string system;  // fixed role preamble; may be empty
  std::string prompt;
  std::vector<std::string> stop_sequences{std::string(kObservationStop)};
  double temperature = 0.0;
};

/// Returns the text up to (not including) the earliest stop sequence.
std::string truncate_at_stop(std::string_view text, const std::vector<std::string>& stops);

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  /// Throws ScriptExhausted, HttpStatusError or Timeout.
  virtual std::string complete(const CompletionRequest& request) = 0;
};

/// Replays a fixed list of completions in order, verbatim.
class ScriptedBackend final : public CompletionBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> entries) : entries_(std::move(entries)) {}

  /// Loads a JSON array whose items are completion strings or
  /// {"prompt": ..., "completion": ...} objects (the recording format).
  static std::unique_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);
  static std::vector<std::string> parse_script(const nlohmann::json& doc);

  std::string complete(const CompletionRequest& request) override;

  [[nodiscard]] std::size_t cursor() const;
  [[nodiscard]] std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::string> entries_;
  std::size_t cursor_ = 0;
  mutable std::mutex mutex_;
};

struct HttpBackendConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string api_key;
  std::string model;
  double temperature = 0.0;
  std::chrono::seconds timeout{60};
  int max_retries = 2;
  std::chrono::milliseconds backoff{500};

  /// Reads CHANGEGPT_BASE_URL, CHANGEGPT_API_KEY, CHANGEGPT_MODEL.
  static HttpBackendConfig from_env();
};

/// Chat-completions client: one system message and one user message per call.
class HttpChatBackend final : public CompletionBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config);

  std::string complete(const CompletionRequest& request) override;

  /// Request body for a completion call; exposed for schema checks.
  [[nodiscard]] nlohmann::json build_body(const CompletionRequest& request) const;

 private:
  HttpBackendConfig config_;
};

/// Throws BadInput if `body` is not a well-formed chat-completions request.
void validate_chat_request(const nlohmann::json& body);

/// Proxies another backend and appends every (prompt, completion) pair to a
/// JSON file that ScriptedBackend::from_file can replay.
class RecordingBackend final : public CompletionBackend {
 public:
  RecordingBackend(std::unique_ptr<CompletionBackend> inner, std::filesystem::path sink);

  std::string complete(const CompletionRequest& request) override;

 private:
  void flush() const;

  std::unique_ptr<CompletionBackend> inner_;
  std::filesystem::path sink_;
  nlohmann::json entries_ = nlohmann::json::array();
  std::mutex mutex_;
};

}  // namespace changegpt
