#include "changegpt/react.hpp"

#include <array>
#include <optional>

#include "changegpt/error.hpp"
#include "changegpt/llm_backend.hpp"
#include "changegpt/text.hpp"
#include "changegpt/toolkit.hpp"

namespace changegpt {

namespace {

enum class Field { Thought, Action, ActionInput, FinalAnswer };

// Longest labels first so "Action Input:" is not read as "Action:".
constexpr std::array<std::pair<std::string_view, Field>, 4> kLabels = {{
    {"Action Input:", Field::ActionInput},
    {"Final Answer:", Field::FinalAnswer},
    {"Thought:", Field::Thought},
    {"Action:", Field::Action},
}};

struct Slot {
  std::optional<std::string> text;
  std::size_t order = 0;
};

}  // namespace

std::string normalize_action(std::string_view action) {
  std::string_view v = trim(action);
  while (!v.empty() && (v.front() == '"' || v.front() == '\'' || v.front() == '`' || v.front() == '[')) {
    v.remove_prefix(1);
  }
  while (!v.empty() && (v.back() == '"' || v.back() == '\'' || v.back() == '`' || v.back() == ']' ||
                        v.back() == '.')) {
    v.remove_suffix(1);
  }
  std::string out;
  for (char c : trim(v)) {
    if (c == ' ' || c == '-' || c == '\t') {
      if (!out.empty() && out.back() != '_') out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

AgentStep parse_step(std::string_view completion, const ToolRegistry& registry) {
  if (const auto obs = completion.find(kObservationStop); obs != std::string_view::npos) {
    completion = completion.substr(0, obs);
  }

  std::array<Slot, 4> slots{};
  std::optional<Field> current;
  std::size_t seen = 0;
  auto append = [&](std::string_view text) {
    if (!current) return;
    auto& slot = slots[static_cast<std::size_t>(*current)];
    if (!slot.text) return;
    if (!slot.text->empty()) slot.text->push_back('\n');
    slot.text->append(text);
  };

  for (auto line : split(completion, '\n')) {
    const auto stripped = trim(line);
    bool labelled = false;
    for (const auto& [label, field] : kLabels) {
      if (!stripped.starts_with(label)) continue;
      labelled = true;
      auto& slot = slots[static_cast<std::size_t>(field)];
      if (slot.text) {
        // Only the first occurrence of each field counts.
        current.reset();
      } else {
        slot.text = std::string(trim(stripped.substr(label.size())));
        slot.order = ++seen;
        current = field;
      }
      break;
    }
    if (!labelled) append(stripped);
  }
  for (auto& s : slots) {
    if (s.text) s.text = std::string(trim(*s.text));
  }

  const auto& thought = slots[static_cast<std::size_t>(Field::Thought)];
  const auto& action = slots[static_cast<std::size_t>(Field::Action)];
  const auto& input = slots[static_cast<std::size_t>(Field::ActionInput)];
  const auto& final_answer = slots[static_cast<std::size_t>(Field::FinalAnswer)];

  if (!thought.text) {
    throw Error(ErrorCode::MalformedStep, "missing 'Thought:'");
  }
  const bool has_action = action.text && !action.text->empty();
  const bool has_final = final_answer.text.has_value();
  if (has_action && (!has_final || action.order < final_answer.order)) {
    ActionBody body;
    body.action = normalize_action(*action.text);
    if (const auto* spec = registry.find(body.action)) body.action = spec->name;
    body.action_input = input.text.value_or("");
    return {*thought.text, std::move(body)};
  }
  if (has_final) {
    return {*thought.text, FinalBody{*final_answer.text}};
  }
  throw Error(ErrorCode::MalformedStep, "neither 'Action:' nor 'Final Answer:' present");
}

}  // namespace changegpt
