#include "changegpt/navigator.hpp"

#include <algorithm>

#include "changegpt/error.hpp"
#include "changegpt/text.hpp"

namespace changegpt {

using nlohmann::json;

const std::string_view kPromptPrefix =
    R"(ChangeGPT is designed to specifically address queries related to changes observed in satellite imagery over time.

ChangeGPT is able to generate human-like text based on the input it receives, allowing it to engage in natural-sounding conversations and provide responses that are coherent and relevant to the topic at hand.

ChangeGPT can process and understand large amounts of remote sensing images, knowledge, and text. As a expertized language model, ChangeGPT cannot directly read remote sensing images, but it has a list of tools to leverage advanced tools to detect, quantify, and classify changes between images, providing insights into land cover transformations, urban expansion, environmental shifts, and more. Each pair of input remote sensing images will be carefully managed with a file name indicating their temporal relationship, labeled as "previous" (`_pre`) and "current" (`_cur`), for instance, "image/xxxx_pre.png" and "image/xxxx_cur.png". This naming convention ensures a structured approach to change detection, facilitating precise analysis and interpretation of temporal changes. ChangeGPT can invoke different tools to indirectly understand the remote sensing image.

When talking about images, ChangeGPT is very strict to the file name and will never fabricate nonexistent files. When using tools to generate new image files, ChangeGPT is also known that the image may not be the same as the user's demand, and will use other visual question answering tools or description tools to observe the real image. ChangeGPT is able to use tools in a sequence, and is loyal to the tool observation outputs rather than faking the image content and image file name. It will remember to provide the file name from the last tool observation, if a new image is generated. Human may provide new remote sensing images to ChangeGPT with a description. The description helps ChangeGPT to understand this image, but ChangeGPT should use tools to finish following tasks, rather than directly imagine from the description.

Overall, ChangeGPT is a powerful visual dialogue assistant tool that can help with a wide range of tasks about remote sensing changes and provide valuable insights and information on a wide range of applications on remote sensing changes.

TOOLS:

ChangeGPT has access to the following tools:
{tools})";

const std::string_view kFormatInstructions =
    R"(To use a tool, please use the following format:

Question: the input question you must answer
Thought: you should always think about what to do
Action: the action to take, should be one of [{tool_names}]
Action Input: the input to the action
Observation: the result of the action
... (this Thought/Action/Action Input/Observation can repeat N times)
Thought: I now know the final answer
Final Answer: the final answer to the original input question)";

const std::string_view kPromptSuffix =
    R"(You are very strict to the filename correctness and will never fake a file name if it does not exist.
You will remember to provide the image file name loyally if it's provided in the last tool observation.
Begin!
Previous conversation history:
{chat_history}
Question: {input}
Since ChangeGPT is a text language model, ChangeGPT must use tools to observe remote sensing images rather than imagination.
The thoughts and observations are only visible for ChangeGPT, ChangeGPT should remember to repeat important information in the final response for Human.
Thought: Do I need to use a tool? {agent_scratchpad} Let's think step by step.
)";

namespace {

constexpr std::string_view kCorrection =
    "\nYour previous reply could not be parsed ({reason}):\n{reply}\n"
    "Reply with \"Thought: ...\" followed by either \"Action: ...\" and \"Action Input: ...\", "
    "or \"Final Answer: ...\".\n";

std::string one_line(std::string_view s) {
  std::string out;
  for (char c : trim(s)) {
    if (c == '\n') {
      out += " / ";
    } else if (c != '\r') {
      out.push_back(c);
    }
  }
  return out;
}

std::string step_summary(const AgentStep& step) {
  if (step.is_final()) return "final answer: " + one_line(step.final_body().final_answer);
  const auto& a = step.action();
  return "action " + a.action + "[" + one_line(a.action_input) + "]";
}

}  // namespace

std::string PromptBundle::text() const {
  return prefix + "\n\n" + image_section + "\n\n" + reference_section + "\n\n" +
         format_instructions + "\n\n" + suffix;
}

std::string_view to_string(QueryStatus status) {
  switch (status) {
    case QueryStatus::Answered: return "answered";
    case QueryStatus::StepLimitExceeded: return "step_limit_exceeded";
    case QueryStatus::ParseFailure: return "parse_failure";
    case QueryStatus::BackendError: return "backend_error";
  }
  return "answered";
}

std::vector<std::string> Trace::tools_used() const {
  std::vector<std::string> out;
  for (const auto& s : steps) {
    if (!s.is_final()) out.push_back(s.action().action);
  }
  return out;
}

json trace_to_json(const Trace& trace) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    json j = {{"thought", s.thought}};
    if (s.is_final()) {
      j["final_answer"] = s.final_body().final_answer;
    } else {
      const auto& a = s.action();
      j["action"] = a.action;
      j["action_input"] = a.action_input;
      j["observation"] = a.observation;
      j["produced_images"] = a.produced_images;
      j["duration_ms"] = a.duration_ms;
    }
    steps.push_back(std::move(j));
  }
  return {{"version", 1},
          {"query", trace.query},
          {"steps", std::move(steps)},
          {"tools_used", trace.tools_used()},
          {"final_answer", trace.final_answer},
          {"status", std::string(to_string(trace.status))},
          {"error", trace.error},
          {"timings",
           {{"total_ms", trace.total_ms}, {"backend_ms", trace.backend_ms}, {"tools_ms", trace.tools_ms}}}};
}

std::string fill_template(std::string_view tmpl,
                          const std::vector<std::pair<std::string_view, std::string>>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find('}', open);
    if (close == std::string_view::npos) break;
    const auto key = tmpl.substr(open + 1, close - open - 1);
    const auto it = std::find_if(values.begin(), values.end(),
                                 [&](const auto& kv) { return kv.first == key; });
    out.append(tmpl.substr(pos, open - pos));
    if (it == values.end()) {
      out.append(tmpl.substr(open, close - open + 1));
    } else {
      out.append(it->second);
    }
    pos = close + 1;
  }
  out.append(tmpl.substr(std::min(pos, tmpl.size())));
  return out;
}

std::string render_scratchpad(const std::vector<AgentStep>& steps) {
  std::string out;
  for (const auto& s : steps) {
    if (s.is_final()) continue;
    const auto& a = s.action();
    out += "\nThought: " + s.thought + "\nAction: " + a.action + "\nAction Input: " + a.action_input +
           "\nObservation: " + a.observation + "\nThought: Do I need to use a tool?";
  }
  return out;
}

std::string render_image_section(const Session& session) {
  std::string out = "IMAGES:";
  const auto& reg = session.images();
  if (reg.size() == 0) return out + "\n(none)";
  for (const auto& id : reg.order()) {
    const auto& rec = reg.get(id);
    const bool root = rec.role.kind == RoleKind::Pre || rec.role.kind == RoleKind::Cur;
    out += "\n" + rec.filename + " (" + rec.role.token() + ", " + std::to_string(rec.width) + "x" +
           std::to_string(rec.height) + ", " + (root ? "pair " : "parent ") + rec.link_id + ")";
  }
  return out;
}

std::string render_reference_section(const Session& session, std::size_t depth) {
  std::string out = "REFERENCES:\nDerived images:";
  bool any = false;
  const auto& reg = session.images();
  for (const auto& id : reg.order()) {
    const auto& rec = reg.get(id);
    if (rec.role.kind == RoleKind::Pre || rec.role.kind == RoleKind::Cur) continue;
    any = true;
    out += "\n- " + rec.filename + " derived from " + reg.get(rec.link_id).filename;
    if (rec.crop_region) {
      const auto& c = *rec.crop_region;
      out += " at x=" + std::to_string(c.x) + ", y=" + std::to_string(c.y) +
             ", w=" + std::to_string(c.w) + ", h=" + std::to_string(c.h);
    }
  }
  if (!any) out += "\n(none)";
  out += "\nRecent log:";
  const auto tail = session.log().tail(depth);
  if (tail.empty()) out += "\n(none)";
  for (const auto& e : tail) {
    out += "\n- [" + std::to_string(e.timestamp_ms) + "] " + std::string(to_string(e.kind)) + ": " +
           one_line(e.payload);
  }
  return out;
}

PromptBundle build_prompt(const Session& session, std::string_view query,
                          const std::vector<AgentStep>& scratchpad, const ToolRegistry& registry,
                          const AgentConfig& config) {
  const auto tools = registry.render_tool_prompt();
  PromptBundle b;
  b.prefix = fill_template(kPromptPrefix, {{"tools", tools.tools_block}});
  b.image_section = render_image_section(session);
  b.reference_section = render_reference_section(session, config.reference_depth);
  b.format_instructions = fill_template(kFormatInstructions, {{"tool_names", tools.tool_names}});
  b.suffix = fill_template(kPromptSuffix, {{"chat_history", session.history().render()},
                                           {"input", std::string(query)},
                                           {"agent_scratchpad", render_scratchpad(scratchpad)}});
  return b;
}

std::string assemble_prompt(const Session& session, std::string_view query,
                            const std::vector<AgentStep>& scratchpad, const ToolRegistry& registry,
                            const AgentConfig& config) {
  return build_prompt(session, query, scratchpad, registry, config).text();
}

QueryOutcome run_query(Session& session, std::string_view query, CompletionBackend& backend,
                       const ToolRegistry& registry, const AgentConfig& config) {
  auto& clock = session.clock();
  auto& log = session.log();
  QueryOutcome out;
  Trace& trace = out.trace;
  trace.query = std::string(query);
  const auto started = clock.now_ms();
  log.append(started, LogKind::Query, std::string(query));

  std::string pending_correction;
  bool answered = false;
  bool aborted = false;
  while (trace.steps.size() < config.max_steps) {
    const auto bundle = build_prompt(session, query, trace.steps, registry, config);
    CompletionRequest request;
    request.system = bundle.prefix;
    request.prompt = bundle.text() + pending_correction;

    std::string completion;
    const auto call_start = clock.now_ms();
    try {
      completion = backend.complete(request);
    } catch (const Error& e) {
      trace.backend_ms += clock.now_ms() - call_start;
      trace.status = QueryStatus::BackendError;
      trace.error = e.what();
      aborted = true;
      break;
    }
    trace.backend_ms += clock.now_ms() - call_start;

    AgentStep step;
    try {
      step = parse_step(completion, registry);
    } catch (const Error& e) {
      log.append(clock.now_ms(), LogKind::Step, std::string("malformed: ") + one_line(completion));
      if (!pending_correction.empty()) {
        trace.status = QueryStatus::ParseFailure;
        trace.error = e.what();
        aborted = true;
        break;
      }
      pending_correction = fill_template(
          kCorrection, {{"reason", e.what()}, {"reply", truncate_at_stop(completion, request.stop_sequences)}});
      continue;
    }
    pending_correction.clear();

    if (step.is_final()) {
      log.append(clock.now_ms(), LogKind::Step, step_summary(step));
      trace.final_answer = step.final_body().final_answer;
      trace.steps.push_back(std::move(step));
      answered = true;
      break;
    }

    auto& action = step.action();
    try {
      auto inv = registry.invoke(session, action.action, action.action_input);
      action.observation = std::move(inv.observation);
      action.produced_images = std::move(inv.produced_images);
      action.duration_ms = inv.duration_ms;
    } catch (const Error& e) {
      action.observation = std::string("Error: ") + e.what();
      if (e.code() == ErrorCode::UnknownTool) {
        action.observation += ". Valid tools are [" + registry.render_tool_prompt().tool_names + "].";
      }
    }
    action.observed = true;
    trace.tools_ms += action.duration_ms;
    log.append(clock.now_ms(), LogKind::Step, step_summary(step));
    trace.steps.push_back(std::move(step));
  }

  if (!answered && !aborted) {
    trace.status = QueryStatus::StepLimitExceeded;
    trace.error = "no final answer within " + std::to_string(config.max_steps) + " steps";
  }
  switch (trace.status) {
    case QueryStatus::Answered: out.answer = trace.final_answer; break;
    case QueryStatus::StepLimitExceeded: out.answer = std::string(kStepLimitMarker); break;
    case QueryStatus::ParseFailure: out.answer = std::string(kParseFailureMarker); break;
    case QueryStatus::BackendError: out.answer = std::string(kBackendFailureMarker); break;
  }
  if (!answered) trace.final_answer = out.answer;
  trace.total_ms = clock.now_ms() - started;
  log.append(clock.now_ms(), LogKind::Answer, out.answer);
  session.history().append({std::string(query), out.answer});
  return out;
}

}  // namespace changegpt
