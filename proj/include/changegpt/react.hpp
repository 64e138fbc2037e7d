#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace changegpt {

class ToolRegistry;

struct ActionBody {
  std::string action;
  std::string action_input;
  std::string observation;  // filled only after the tool ran
  bool observed = false;
  std::vector<std::string> produced_images;
  std::int64_t duration_ms = 0;
};

struct FinalBody {
  std::string final_answer;
};

/// One Thought followed by either an action or a final answer.
struct AgentStep {
  std::string thought;
  std::variant<ActionBody, FinalBody> body;

  [[nodiscard]] bool is_final() const { return std::holds_alternative<FinalBody>(body); }
  [[nodiscard]] const ActionBody& action() const { return std::get<ActionBody>(body); }
  [[nodiscard]] ActionBody& action() { return std::get<ActionBody>(body); }
  [[nodiscard]] const FinalBody& final_body() const { return std::get<FinalBody>(body); }
};

/// Trims, case-folds and snake-cases an Action name ("Pixel Counting" ->
/// "pixel_counting").
std::string normalize_action(std::string_view action);

/// Parses one model completion. Everything from the first "Observation:" on
/// is discarded, so the model can never supply its own tool results.
/// Throws MalformedStep when there is no Thought, or neither an Action nor a
/// Final Answer.
AgentStep parse_step(std::string_view completion, const ToolRegistry& registry);

}  // namespace changegpt
