#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "changegpt/llm_backend.hpp"
#include "changegpt/react.hpp"
#include "changegpt/session.hpp"
#include "changegpt/toolkit.hpp"

namespace changegpt {

// Prompt templates. Placeholders: {tools}, {tool_names}, {chat_history},
// {input}, {agent_scratchpad}.
extern const std::string_view kPromptPrefix;
extern const std::string_view kFormatInstructions;
extern const std::string_view kPromptSuffix;

/// The five prompt parts, concatenated in declaration order.
struct PromptBundle {
  std::string prefix;
  std::string image_section;
  std::string reference_section;
  std::string format_instructions;
  std::string suffix;

  [[nodiscard]] std::string text() const;
};

enum class QueryStatus { Answered, StepLimitExceeded, ParseFailure, BackendError };
std::string_view to_string(QueryStatus status);

struct Trace {
  std::string query;
  std::vector<AgentStep> steps;
  std::string final_answer;
  QueryStatus status = QueryStatus::Answered;
  std::string error;
  std::int64_t total_ms = 0;
  std::int64_t backend_ms = 0;
  std::int64_t tools_ms = 0;

  /// Tool names of every action step, in order (a multiset).
  [[nodiscard]] std::vector<std::string> tools_used() const;
};

nlohmann::json trace_to_json(const Trace& trace);

struct AgentConfig {
  std::size_t max_steps = 12;
  std::size_t reference_depth = 20;
};

/// Replaces every "{key}" in `tmpl` with the mapped value.
std::string fill_template(std::string_view tmpl,
                          const std::vector<std::pair<std::string_view, std::string>>& values);

std::string render_scratchpad(const std::vector<AgentStep>& steps);
std::string render_image_section(const Session& session);
std::string render_reference_section(const Session& session, std::size_t depth);

PromptBundle build_prompt(const Session& session, std::string_view query,
                          const std::vector<AgentStep>& scratchpad, const ToolRegistry& registry,
                          const AgentConfig& config = {});
std::string assemble_prompt(const Session& session, std::string_view query,
                            const std::vector<AgentStep>& scratchpad, const ToolRegistry& registry,
                            const AgentConfig& config = {});

struct QueryOutcome {
  std::string answer;
  Trace trace;

  [[nodiscard]] bool ok() const { return trace.status == QueryStatus::Answered; }
};

inline constexpr std::string_view kStepLimitMarker = "[no answer: step limit exceeded]";
inline constexpr std::string_view kParseFailureMarker = "[no answer: unparseable model output]";
inline constexpr std::string_view kBackendFailureMarker = "[no answer: backend failure]";

/// Runs one query to a Final Answer (or failure), appending the turn to the
/// session's dialogue history and reference log. Never throws for agent-level
/// failures; they are reported through trace.status.
QueryOutcome run_query(Session& session, std::string_view query, CompletionBackend& backend,
                       const ToolRegistry& registry, const AgentConfig& config = {});

}  // namespace changegpt
