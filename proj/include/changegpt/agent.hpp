#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "changegpt/eval.hpp"
#include "changegpt/llm_backend.hpp"
#include "changegpt/navigator.hpp"
#include "changegpt/session.hpp"
#include "changegpt/toolkit.hpp"

namespace changegpt {

/// "scripted:<path>" or "http". A scripted path is one of:
///   a directory holding <key>.json scripts (falling back to default.json),
///   a JSON array used for every key, or
///   a JSON object mapping keys to arrays (falling back to "default").
struct BackendSelector {
  enum class Kind { Scripted, Http };
  Kind kind = Kind::Scripted;
  std::filesystem::path path;

  /// Throws BadInput for any other grammar.
  static BackendSelector parse(std::string_view text);
  [[nodiscard]] std::string str() const;
};

/// Builds one fresh backend per session (or per evaluated question).
class BackendFactory {
 public:
  explicit BackendFactory(BackendSelector selector, std::optional<HttpBackendConfig> http = std::nullopt);

  /// Throws BadInput when a scripted source has no entry for `key`.
  [[nodiscard]] std::unique_ptr<CompletionBackend> create(std::string_view key) const;
  [[nodiscard]] const BackendSelector& selector() const { return selector_; }

 private:
  BackendSelector selector_;
  HttpBackendConfig http_;
};

/// A session seeded the same way for every run, so ids and timings replay.
std::unique_ptr<Session> make_replay_session(std::string id = "local");

/// Registers the question's pair (and crop, if any) in a session. Throws
/// IoError / BadImage for unreadable files, DimensionMismatch and OutOfBounds.
void prepare_session(Session& session, const Question& q);

/// Runs a single question end to end in a fresh replay session.
AgentRun run_question(const Question& q, const ToolRegistry& registry, CompletionBackend& backend,
                      const AgentConfig& config = {});

/// Runner for run_eval: one fresh session and backend (keyed by question id)
/// per question.
AgentRunner make_agent_runner(const ToolRegistry& registry, const BackendFactory& backends,
                              AgentConfig config = {});

}  // namespace changegpt
