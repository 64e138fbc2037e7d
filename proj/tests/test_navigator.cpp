#include <gtest/gtest.h>

#include "changegpt/agent.hpp"
#include "changegpt/error.hpp"
#include "changegpt/navigator.hpp"
#include "test_paths.hpp"

using namespace changegpt;

namespace {

/// Replays completions and keeps every request it saw.
class CapturingBackend final : public CompletionBackend {
 public:
  explicit CapturingBackend(std::vector<std::string> replies, bool repeat_last = false)
      : replies_(std::move(replies)), repeat_last_(repeat_last) {}

  std::string complete(const CompletionRequest& request) override {
    requests.push_back(request);
    if (next_ >= replies_.size()) {
      if (!repeat_last_) throw Error(ErrorCode::ScriptExhausted, "no more replies");
      return replies_.back();
    }
    return replies_[next_++];
  }

  std::vector<CompletionRequest> requests;

 private:
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
  bool repeat_last_;
};

ToolRegistry registry() {
  ToolkitConfig cfg;
  cfg.fixtures_dir = testpaths::fixtures() / "tools";
  return make_default_registry(cfg);
}

std::unique_ptr<Session> pair_session(const std::string& pair = "3f9a01") {
  Question q;
  q.pre = testpaths::fixtures() / "images" / (pair + "_pre.png");
  q.cur = testpaths::fixtures() / "images" / (pair + "_cur.png");
  q.pair_id = pair;
  auto s = make_replay_session();
  prepare_session(*s, q);
  return s;
}

const std::string kWhetherStep =
    "Thought: Do I need to use a tool? Yes\nAction: whether_change\nAction Input: pre=pre, cur=cur";
const std::string kFinalYes = "Thought: Do I need to use a tool? No\nFinal Answer: Yes.";

}  // namespace

TEST(Prompt, PartsInOrderWithPlaceholdersFilled) {
  const auto reg = registry();
  auto s = pair_session();
  const auto b = build_prompt(*s, "Did anything change?", {}, reg);
  const auto text = b.text();
  const auto p_tools = text.find("ChangeGPT has access to the following tools:\nbinary_change_detection: ");
  const auto p_images = text.find("IMAGES:\n");
  const auto p_refs = text.find("REFERENCES:\n");
  const auto p_format = text.find("To use a tool, please use the following format:");
  const auto p_suffix = text.find("Begin!");
  ASSERT_NE(p_tools, std::string::npos);
  EXPECT_LT(p_tools, p_images);
  EXPECT_LT(p_images, p_refs);
  EXPECT_LT(p_refs, p_format);
  EXPECT_LT(p_format, p_suffix);
  EXPECT_NE(text.find("Action: the action to take, should be one of [binary_change_detection, "), std::string::npos);
  EXPECT_NE(text.find("Question: Did anything change?\n"), std::string::npos);
  EXPECT_TRUE(text.ends_with("Thought: Do I need to use a tool?  Let's think step by step.\n"));
  EXPECT_EQ(text.find("{tools}"), std::string::npos);
  EXPECT_EQ(text.find("{agent_scratchpad}"), std::string::npos);
  EXPECT_NE(b.image_section.find(s->images().get("pre").filename + " (pre, 64x64, pair 3f9a01)"),
            std::string::npos);
}

TEST(Prompt, FillTemplateLeavesUnknownKeys) {
  EXPECT_EQ(fill_template("a {x} b {y} {", {{"x", "1"}}), "a 1 b {y} {");
}

TEST(Navigator, TwoStepRunAndRequestShape) {
  const auto reg = registry();
  auto s = pair_session();
  CapturingBackend backend({kWhetherStep, kFinalYes});
  const auto out = run_query(*s, "Has it changed?", backend, reg);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.answer, "Yes.");
  ASSERT_EQ(out.trace.steps.size(), 2u);
  EXPECT_EQ(out.trace.tools_used(), std::vector<std::string>{"whether_change"});
  ASSERT_EQ(backend.requests.size(), 2u);
  const auto& r = backend.requests[1];
  EXPECT_EQ(r.stop_sequences, std::vector<std::string>{"Observation:"});
  EXPECT_EQ(r.temperature, 0.0);
  EXPECT_TRUE(r.prompt.starts_with(r.system));
  // The second prompt carries the first step and its real observation.
  EXPECT_NE(r.prompt.find("Action: whether_change\nAction Input: pre=pre, cur=cur\nObservation: There is a discernible"),
            std::string::npos);
  ASSERT_EQ(s->history().turns().size(), 1u);
  EXPECT_EQ(s->history().turns()[0].answer, "Yes.");
  const auto j = trace_to_json(out.trace);
  EXPECT_EQ(j.at("status"), "answered");
  EXPECT_EQ(j.at("steps").size(), 2u);
}

TEST(Navigator, SecondRoundSeesFirstTurn) {
  const auto reg = registry();
  auto s = pair_session();
  CapturingBackend backend({kFinalYes, kFinalYes});
  run_query(*s, "first question", backend, reg);
  run_query(*s, "second question", backend, reg);
  EXPECT_EQ(backend.requests[0].prompt.find("Human: first question"), std::string::npos);
  EXPECT_NE(backend.requests[1].prompt.find("Human: first question\nAI: Yes."), std::string::npos);
}

TEST(Navigator, MalformedReplyRetriedOnce) {
  const auto reg = registry();
  auto s = pair_session();
  CapturingBackend backend({"I think it changed.", kFinalYes});
  const auto out = run_query(*s, "q", backend, reg);
  EXPECT_TRUE(out.ok());
  ASSERT_EQ(backend.requests.size(), 2u);
  EXPECT_NE(backend.requests[1].prompt.find("could not be parsed"), std::string::npos);
  EXPECT_NE(backend.requests[1].prompt.find("I think it changed."), std::string::npos);
  EXPECT_EQ(backend.requests[0].prompt.find("could not be parsed"), std::string::npos);
}

TEST(Navigator, SecondMalformedReplyIsParseFailure) {
  const auto reg = registry();
  auto s = pair_session();
  CapturingBackend backend({"nonsense", "more nonsense", kFinalYes});
  const auto out = run_query(*s, "q", backend, reg);
  EXPECT_EQ(out.trace.status, QueryStatus::ParseFailure);
  EXPECT_EQ(out.answer, kParseFailureMarker);
  EXPECT_EQ(backend.requests.size(), 2u);
  EXPECT_EQ(s->history().turns().back().answer, kParseFailureMarker);
}

TEST(Navigator, StepLimit) {
  const auto reg = registry();
  auto s = pair_session();
  CapturingBackend backend({kWhetherStep}, true);
  const auto out = run_query(*s, "q", backend, reg);
  EXPECT_EQ(out.trace.status, QueryStatus::StepLimitExceeded);
  EXPECT_EQ(out.trace.steps.size(), 12u);
  EXPECT_EQ(out.answer, kStepLimitMarker);

  CapturingBackend short_backend({kWhetherStep}, true);
  AgentConfig cfg;
  cfg.max_steps = 3;
  EXPECT_EQ(run_query(*s, "q", short_backend, reg, cfg).trace.steps.size(), 3u);
}

TEST(Navigator, UnknownToolAndToolErrorsBecomeObservations) {
  const auto reg = registry();
  auto s = pair_session();
  CapturingBackend backend({"Thought: t\nAction: Teleport\nAction Input: x",
                            "Thought: t\nAction: pixel_counting\nAction Input: image=pre", kFinalYes});
  const auto out = run_query(*s, "q", backend, reg);
  ASSERT_TRUE(out.ok());
  ASSERT_EQ(out.trace.steps.size(), 3u);
  const auto& a = out.trace.steps[0].action();
  EXPECT_EQ(a.action, "teleport");
  EXPECT_TRUE(a.observation.starts_with("Error: "));
  EXPECT_NE(a.observation.find("Valid tools are [binary_change_detection"), std::string::npos);
  EXPECT_TRUE(out.trace.steps[1].action().observation.starts_with("Error: "));
}

TEST(Navigator, BackendFailureKeepsPartialTrace) {
  const auto reg = registry();
  auto s = pair_session();
  CapturingBackend backend({kWhetherStep});
  const auto out = run_query(*s, "q", backend, reg);
  EXPECT_EQ(out.trace.status, QueryStatus::BackendError);
  EXPECT_EQ(out.trace.steps.size(), 1u);
  EXPECT_NE(out.trace.error.find("no more replies"), std::string::npos);
  EXPECT_EQ(out.answer, kBackendFailureMarker);
}

TEST(Navigator, ReplayIsDeterministic) {
  const auto reg = registry();
  std::string first;
  for (int i = 0; i < 3; ++i) {
    auto s = pair_session();
    CapturingBackend backend({kWhetherStep, kFinalYes});
    const auto dump = trace_to_json(run_query(*s, "q", backend, reg).trace).dump();
    if (i == 0) first = dump;
    EXPECT_EQ(dump, first);
  }
}

TEST(Navigator, LogRecordsQueryStepsAndAnswer) {
  const auto reg = registry();
  auto s = pair_session();
  CapturingBackend backend({kWhetherStep, kFinalYes});
  run_query(*s, "q", backend, reg);
  std::vector<LogKind> kinds;
  for (const auto& e : s->log().entries()) kinds.push_back(e.kind);
  const std::vector<LogKind> tail(kinds.end() - 5, kinds.end());
  EXPECT_EQ(tail, (std::vector<LogKind>{LogKind::Query, LogKind::ToolCall, LogKind::Step, LogKind::Step,
                                        LogKind::Answer}));
  // Timestamps never go backwards.
  for (std::size_t i = 1; i < s->log().entries().size(); ++i) {
    EXPECT_LE(s->log().entries()[i - 1].timestamp_ms, s->log().entries()[i].timestamp_ms);
  }
}
