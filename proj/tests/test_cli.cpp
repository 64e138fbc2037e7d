#include <gtest/gtest.h>

#include <sstream>

#include "changegpt/cli.hpp"
#include "checks.hpp"
#include "test_paths.hpp"

using namespace changegpt;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "changegpt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Result r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string fixture(const std::string& rel) { return (testpaths::fixtures() / rel).string(); }

std::string write_script(const std::string& name, const json& entries) {
  const auto path = testpaths::scratch("cli_" + name) / "script.json";
  write_text_file(path, entries.dump());
  return "scripted:" + path.string();
}

std::vector<std::string> ask_args(const std::string& backend, const std::string& trace) {
  return {"ask",      "--pre",     fixture("images/3f9a01_pre.png"),
          "--cur",    fixture("images/3f9a01_cur.png"),
          "--pair-id", "3f9a01",   "--fixtures",
          fixture("tools"),        "--backend",
          backend,    "--trace",   trace,
          "Is there a discernible difference between the images indicating changes?"};
}

const std::string kWhetherStep =
    "Thought: Do I need to use a tool? Yes\nAction: whether_change\nAction Input: pre=pre, cur=cur";

}  // namespace

TEST(Cli, AskPrintsAnswerAndWritesTraceLikeDirectRun) {
  const auto dir = testpaths::scratch("cli_ask");
  const auto trace = (dir / "trace.json").string();
  const auto r = cli(ask_args("scripted:" + fixture("scripts/whether-01.json"), trace));
  ASSERT_EQ(r.code, kExitOk) << r.err;

  const auto dataset = load_dataset(testpaths::fixtures() / "dataset.jsonl");
  const auto script = ScriptedBackend::from_file(testpaths::fixtures() / "scripts/whether-01.json");
  const auto direct = run_question(dataset.front(), checks::fixture_registry(), *script);
  EXPECT_EQ(r.out, direct.answer + "\ntrace: " + trace + "\n");
  EXPECT_EQ(json::parse(read_text_file(trace)), direct.trace);
}

TEST(Cli, BadArgumentsExit2) {
  EXPECT_EQ(cli({}).code, kExitBadArgs);
  EXPECT_EQ(cli({"ask", "--pre", "a.png"}).code, kExitBadArgs);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitBadArgs);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);

  const auto trace = (testpaths::scratch("cli_bad") / "t.json").string();
  auto args = ask_args(write_script("bad", {"unused"}), trace);
  args.insert(args.end() - 1, {"--crop", "1,2,3"});
  EXPECT_EQ(cli(args).code, kExitBadArgs);
  args = ask_args(write_script("bad", {"unused"}), trace);
  args.insert(args.end() - 1, {"--crop", "60,60,16,16"});
  const auto r = cli(args);
  EXPECT_EQ(r.code, kExitBadArgs);
  EXPECT_NE(r.err.find("exceeds 64x64"), std::string::npos);
  args = ask_args(write_script("bad", {"unused"}), trace);
  args.insert(args.end() - 1, {"--remote", "nourl"});
  EXPECT_EQ(cli(args).code, kExitBadArgs);
  EXPECT_EQ(cli(ask_args("openai", trace)).code, kExitBadArgs);
}

TEST(Cli, ImageProblemsExit3) {
  const auto dir = testpaths::scratch("cli_images");
  const auto small = encode_rgb(RgbImage(8, 8, std::vector<std::uint8_t>(8 * 8 * 3, 9)));
  write_file(dir / "small.png", small);
  auto args = ask_args(write_script("images", {"unused"}), (dir / "t.json").string());
  args[4] = (dir / "small.png").string();
  EXPECT_EQ(cli(args).code, kExitImageError);
  args[4] = (dir / "missing.png").string();
  EXPECT_EQ(cli(args).code, kExitImageError);
  write_text_file(dir / "text.png", "not a png");
  args[4] = (dir / "text.png").string();
  EXPECT_EQ(cli(args).code, kExitImageError);
}

TEST(Cli, BackendFailureExit4AndNoAnswerExit1) {
  const auto dir = testpaths::scratch("cli_fail");
  const auto trace = (dir / "t.json").string();
  auto r = cli(ask_args(write_script("exhaust", {kWhetherStep}), trace));
  EXPECT_EQ(r.code, kExitBackendError);
  EXPECT_EQ(json::parse(read_text_file(trace)).at("steps").size(), 1u);

  auto args = ask_args(write_script("limit", {kWhetherStep, kWhetherStep}), trace);
  args.insert(args.end() - 1, {"--max-steps", "2"});
  r = cli(args);
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_EQ(json::parse(read_text_file(trace)).at("status"), "step_limit_exceeded");
}

TEST(Cli, EvalWritesReportAndSummary) {
  const auto dir = testpaths::scratch("cli_eval");
  const auto r = cli({"eval", fixture("dataset.jsonl"), "--report", (dir / "report.json").string(), "--traces",
                      (dir / "traces").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto report = checks::run_fixture_eval().first;
  EXPECT_EQ(r.out, "P=100.00 R=100.00 Match=100.00\n");
  EXPECT_EQ(r.out, summary_line(report) + "\n");
  EXPECT_EQ(json::parse(read_text_file(dir / "report.json")), report_to_json(report));
  EXPECT_TRUE(std::filesystem::exists(dir / "traces/whether-01.json"));

  const auto md = cli({"eval", fixture("dataset.jsonl"), "--report", (dir / "report.md").string()});
  EXPECT_EQ(md.code, kExitOk);
  EXPECT_EQ(read_text_file(dir / "report.md"), report_to_markdown(report));
}

TEST(Cli, EvalDatasetProblemsExit5) {
  const auto dir = testpaths::scratch("cli_dataset");
  EXPECT_EQ(cli({"eval", (dir / "none.jsonl").string()}).code, kExitDatasetError);
  write_text_file(dir / "bad.jsonl", "{\"id\": 1}\n");
  const auto r = cli({"eval", (dir / "bad.jsonl").string()});
  EXPECT_EQ(r.code, kExitDatasetError);
  EXPECT_NE(r.err.find("bad.jsonl:1:"), std::string::npos);
}

TEST(Cli, ToolsList) {
  const auto r = cli({"tools", "list", "--fixtures", fixture("tools")});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 8);
  EXPECT_TRUE(r.out.starts_with("binary_change_detection ["));
}
