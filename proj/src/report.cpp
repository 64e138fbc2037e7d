#include <algorithm>

#include <fmt/format.h>

#include "changegpt/error.hpp"
#include "changegpt/eval.hpp"
#include "changegpt/toolkit.hpp"

namespace changegpt {

using nlohmann::json;

EvalRecord score_record(const Question& q, std::string answer, ToolMultiset tools_used,
                        std::int64_t latency_ms, std::string status) {
  EvalRecord r;
  r.question_id = q.id;
  r.qtype = q.qtype;
  r.subtype = q.subtype;
  r.difficulty = bucket_difficulty(q);
  r.precision = precision(tools_used, q.required_tools);
  r.recall = recall(tools_used, q.required_tools);
  const auto verdict = judge(answer, q.reference);
  r.correct = verdict.correct;
  r.no_number = verdict.no_number;
  r.error_class = classify_error(r.precision, r.recall, r.correct);
  r.tools_used = std::move(tools_used);
  r.latency_ms = latency_ms;
  r.answer = std::move(answer);
  r.status = std::move(status);
  return r;
}

Aggregate aggregate(const std::vector<const EvalRecord*>& records) {
  Aggregate a;
  a.count = records.size();
  if (records.empty()) return a;
  for (const auto* r : records) {
    a.precision += r->precision;
    a.recall += r->recall;
    if (r->correct) ++a.correct;
  }
  const auto n = static_cast<double>(a.count);
  a.precision /= n;
  a.recall /= n;
  a.match = static_cast<double>(a.correct) / n;
  return a;
}

namespace {

std::string type_key(QType t, const std::string& subtype) {
  if (t == QType::Whether) return std::string(to_string(t));
  return std::string(to_string(t)) + "/" + subtype;
}

json aggregate_json(const Aggregate& a) {
  return {{"count", a.count}, {"correct", a.correct}, {"precision", a.precision},
          {"recall", a.recall}, {"match", a.match}};
}

std::string pct(double v) { return fmt::format("{:.2f}", v * 100.0); }

}  // namespace

EvalReport build_report(std::vector<EvalRecord> records) {
  EvalReport rep;
  rep.records = std::move(records);

  // Type rows follow the taxonomy order, then any subtype not in it.
  for (auto t : {QType::Whether, QType::Size, QType::Number, QType::Class}) {
    for (const auto& sub : legal_subtypes(t)) {
      std::vector<const EvalRecord*> group;
      for (const auto& r : rep.records) {
        if (r.qtype == t && r.subtype == sub) group.push_back(&r);
      }
      if (!group.empty()) rep.by_type.emplace_back(type_key(t, sub), aggregate(group));
    }
  }

  for (auto d : {Difficulty::Easy, Difficulty::Medium, Difficulty::Difficult}) {
    std::vector<const EvalRecord*> group;
    for (const auto& r : rep.records) {
      if (r.difficulty == d) group.push_back(&r);
    }
    if (!group.empty()) rep.by_difficulty[d] = aggregate(group);
  }

  std::vector<const EvalRecord*> all;
  for (const auto& r : rep.records) {
    all.push_back(&r);
    if (r.error_class) ++rep.error_histogram[*r.error_class];
  }
  rep.total = aggregate(all);
  return rep;
}

json report_to_json(const EvalReport& report) {
  json records = json::array();
  for (const auto& r : report.records) {
    records.push_back({{"id", r.question_id},
                       {"qtype", to_string(r.qtype)},
                       {"subtype", r.subtype},
                       {"difficulty", to_string(r.difficulty)},
                       {"tools_used", r.tools_used},
                       {"precision", r.precision},
                       {"recall", r.recall},
                       {"correct", r.correct},
                       {"no_number", r.no_number},
                       {"error_class", r.error_class ? json(to_string(*r.error_class)) : json(nullptr)},
                       {"latency_ms", r.latency_ms},
                       {"status", r.status},
                       {"answer", r.answer}});
  }
  json by_type = json::object();
  for (const auto& [key, agg] : report.by_type) by_type[key] = aggregate_json(agg);
  json by_difficulty = json::object();
  for (const auto& [d, agg] : report.by_difficulty) {
    by_difficulty[std::string(to_string(d))] = aggregate_json(agg);
  }
  json errors = json::object();
  for (auto e : {ErrorClass::Misunderstood, ErrorClass::InsufficientTools, ErrorClass::IncorrectTools,
                 ErrorClass::TooComplex}) {
    auto it = report.error_histogram.find(e);
    errors[std::string(to_string(e))] = it == report.error_histogram.end() ? 0 : it->second;
  }
  return {{"version", 1},
          {"records", records},
          {"by_type", by_type},
          {"by_difficulty", by_difficulty},
          {"total", aggregate_json(report.total)},
          {"errors", errors}};
}

std::string report_to_markdown(const EvalReport& report) {
  std::string out;
  out += "| Questions | N | Precision | Recall | Match |\n";
  out += "|---|---:|---:|---:|---:|\n";
  auto row = [&](std::string_view name, const Aggregate& a) {
    out += fmt::format("| {} | {} | {} | {} | {} |\n", name, a.count, pct(a.precision), pct(a.recall),
                       pct(a.match));
  };
  for (const auto& [d, agg] : report.by_difficulty) row(to_string(d), agg);
  row("Total", report.total);

  out += "\n| Type | N | Precision | Recall | Match |\n";
  out += "|---|---:|---:|---:|---:|\n";
  for (const auto& [key, agg] : report.by_type) row(key, agg);

  out += "\n| Error class | Count |\n|---|---:|\n";
  for (auto e : {ErrorClass::Misunderstood, ErrorClass::InsufficientTools, ErrorClass::IncorrectTools,
                 ErrorClass::TooComplex}) {
    auto it = report.error_histogram.find(e);
    out += fmt::format("| {} | {} |\n", to_string(e),
                       it == report.error_histogram.end() ? 0 : it->second);
  }
  return out;
}

std::string summary_line(const EvalReport& report) {
  return fmt::format("P={} R={} Match={}", pct(report.total.precision), pct(report.total.recall),
                     pct(report.total.match));
}

EvalReport run_eval(const std::vector<Question>& dataset, const AgentRunner& runner,
                    const ToolRegistry* registry, std::vector<json>* traces) {
  if (registry != nullptr) {
    for (const auto& q : dataset) {
      for (const auto& tool : q.required_tools) {
        if (registry->find(tool) == nullptr) {
          throw Error(ErrorCode::DatasetError,
                      "question '" + q.id + "' requires unknown tool '" + tool + "'");
        }
      }
    }
  }

  std::vector<EvalRecord> records;
  records.reserve(dataset.size());
  for (const auto& q : dataset) {
    AgentRun run;
    try {
      run = runner(q);
    } catch (const std::exception& e) {
      run = AgentRun{};
      run.status = "error";
      run.trace = {{"error", e.what()}};
    }
    if (traces != nullptr) {
      json t = run.trace.is_null() ? json::object() : run.trace;
      t["question_id"] = q.id;
      traces->push_back(std::move(t));
    }
    records.push_back(score_record(q, std::move(run.answer), std::move(run.tools_used),
                                   run.latency_ms, std::move(run.status)));
  }
  return build_report(std::move(records));
}

}  // namespace changegpt
