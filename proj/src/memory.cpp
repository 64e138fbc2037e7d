#include "changegpt/memory.hpp"

#include "changegpt/error.hpp"

namespace changegpt {

std::string_view to_string(LogKind kind) {
  switch (kind) {
    case LogKind::Query: return "query";
    case LogKind::Step: return "step";
    case LogKind::ToolCall: return "tool_call";
    case LogKind::ImageRegistered: return "image_registered";
    case LogKind::Answer: return "answer";
  }
  return "query";
}

LogKind log_kind_from_string(std::string_view s) {
  for (auto k : {LogKind::Query, LogKind::Step, LogKind::ToolCall,
                 LogKind::ImageRegistered, LogKind::Answer}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::BadInput, "unknown log kind '" + std::string(s) + "'");
}

std::string DialogueHistory::render() const {
  std::string out;
  for (const auto& t : turns_) {
    out += "Human: " + t.query + "\nAI: " + t.answer + "\n";
  }
  return out;
}

}  // namespace changegpt
