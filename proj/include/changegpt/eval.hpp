#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "changegpt/raster.hpp"

namespace changegpt {

class ToolRegistry;

using ToolMultiset = std::vector<std::string>;

/// |used ∩ required| / |used| with multiset intersection; 0 when used is empty.
double precision(const ToolMultiset& used, const ToolMultiset& required);
/// |used ∩ required| / |required|. Throws EmptyRequirement.
double recall(const ToolMultiset& used, const ToolMultiset& required);
/// Size of the multiset intersection (per-name min of multiplicities).
std::size_t multiset_intersection(const ToolMultiset& a, const ToolMultiset& b);

// ---- answers ---------------------------------------------------------------

struct AnswerSpec;

struct BooleanAnswer {
  bool yes = true;
};
struct NumericAnswer {
  double value = 0.0;
  /// Relative when |value| > 1, absolute otherwise.
  double tolerance = 0.0;
};
struct CategoricalAnswer {
  std::vector<std::string> accepted;
};
/// Sub-matchers must all pass, each matched after the previous one's match
/// in the answer text (so "before" facts precede "after" facts).
struct ChecklistAnswer {
  std::vector<AnswerSpec> items;
};

struct AnswerSpec {
  std::variant<BooleanAnswer, NumericAnswer, CategoricalAnswer, ChecklistAnswer> kind;
};

struct Judgement {
  bool correct = false;
  bool no_number = false;  // a numeric matcher found no parseable number
};

Judgement judge(std::string_view answer, const AnswerSpec& spec);
inline bool judge_answer(std::string_view answer, const AnswerSpec& spec) {
  return judge(answer, spec).correct;
}

/// Numbers in the text, skipping digits embedded in identifiers.
std::vector<double> extract_numbers(std::string_view text);

AnswerSpec answer_spec_from_json(const nlohmann::json& j);
nlohmann::json answer_spec_to_json(const AnswerSpec& spec);

// ---- dataset ---------------------------------------------------------------

enum class QType { Whether, Size, Number, Class };
std::string_view to_string(QType t);
std::optional<QType> qtype_from_string(std::string_view s);

/// Subtypes allowed for each question type ("/" for Whether).
const std::vector<std::string>& legal_subtypes(QType t);

enum class CropParent { Pre, Cur, Both };

/// A user-drawn crop. Both crops pre and cur with the same region, the way a
/// change question about a local area is posed.
struct CropSpec {
  CropRegion region;
  CropParent parent = CropParent::Pre;
};

struct Question {
  std::string id;
  QType qtype = QType::Whether;
  std::string subtype;
  std::string text;
  std::filesystem::path pre;
  std::filesystem::path cur;
  std::optional<std::string> pair_id;
  std::optional<CropSpec> crop;
  ToolMultiset required_tools;
  AnswerSpec reference;
};

/// Validates and converts one dataset record. Throws DatasetError.
Question question_from_json(const nlohmann::json& j);
nlohmann::json question_to_json(const Question& q);

/// Reads JSON Lines; relative image paths resolve against the file's folder.
/// Throws DatasetError with the 1-based line number.
std::vector<Question> load_dataset(const std::filesystem::path& path);

// ---- scoring ---------------------------------------------------------------

enum class Difficulty { Easy, Medium, Difficult };
std::string_view to_string(Difficulty d);
Difficulty bucket_difficulty(std::size_t required_tool_count);
inline Difficulty bucket_difficulty(const Question& q) {
  return bucket_difficulty(q.required_tools.size());
}

enum class ErrorClass { Misunderstood, InsufficientTools, IncorrectTools, TooComplex };
std::string_view to_string(ErrorClass e);

/// None for correct answers; otherwise the failure class implied by (P, R).
std::optional<ErrorClass> classify_error(double precision, double recall, bool correct);

double match_rate(const std::vector<bool>& correct);

struct McNemarResult {
  double statistic = 0.0;  // continuity-corrected chi-square
  double p_value = 1.0;    // chi-square(1) upper tail
  std::optional<double> exact_p_value;  // two-sided binomial, when b + c < 25
};

/// Throws NoDiscordantPairs when b + c == 0.
McNemarResult mcnemar(std::uint64_t b, std::uint64_t c);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct LatencyEstimate {
  int rounds = 0;
  Range total_s;
};

/// rounds = tools + 2; total = tools * tool time + rounds * API time.
LatencyEstimate estimate_latency(int tool_count, Range tool_ms, Range api_s);

struct EvalRecord {
  std::string question_id;
  QType qtype = QType::Whether;
  std::string subtype;
  Difficulty difficulty = Difficulty::Easy;
  ToolMultiset tools_used;
  double precision = 0.0;
  double recall = 0.0;
  bool correct = false;
  bool no_number = false;
  std::optional<ErrorClass> error_class;
  std::int64_t latency_ms = 0;
  std::string answer;
  std::string status;
};

/// Scores one finished run.
EvalRecord score_record(const Question& q, std::string answer, ToolMultiset tools_used,
                        std::int64_t latency_ms = 0, std::string status = "answered");

struct Aggregate {
  std::size_t count = 0;
  std::size_t correct = 0;
  double precision = 0.0;  // mean of per-question values
  double recall = 0.0;
  double match = 0.0;
};

Aggregate aggregate(const std::vector<const EvalRecord*>& records);

struct EvalReport {
  std::vector<EvalRecord> records;
  std::vector<std::pair<std::string, Aggregate>> by_type;  // "Size/Basic", ...
  std::map<Difficulty, Aggregate> by_difficulty;
  Aggregate total;
  std::map<ErrorClass, std::size_t> error_histogram;
};

/// Recomputes every aggregate from the records.
EvalReport build_report(std::vector<EvalRecord> records);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_to_markdown(const EvalReport& report);
/// "P=.. R=.. Match=.." with percentages to two decimals.
std::string summary_line(const EvalReport& report);

struct AgentRun {
  std::string answer;
  ToolMultiset tools_used;
  std::int64_t latency_ms = 0;
  std::string status = "answered";
  nlohmann::json trace;
};

using AgentRunner = std::function<AgentRun(const Question&)>;

/// Runs every question; a runner exception scores that question as incorrect
/// with no tools rather than aborting the run. When a registry is given,
/// required tools outside it are a DatasetError.
EvalReport run_eval(const std::vector<Question>& dataset, const AgentRunner& runner,
                    const ToolRegistry* registry = nullptr,
                    std::vector<nlohmann::json>* traces = nullptr);

}  // namespace changegpt
