#include <algorithm>
#include <cmath>
#include <map>

#include "changegpt/error.hpp"
#include "changegpt/eval.hpp"

namespace changegpt {

std::size_t multiset_intersection(const ToolMultiset& a, const ToolMultiset& b) {
  std::map<std::string_view, std::size_t> counts;
  for (const auto& t : a) ++counts[t];
  std::size_t n = 0;
  for (const auto& t : b) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++n;
    }
  }
  return n;
}

double precision(const ToolMultiset& used, const ToolMultiset& required) {
  if (used.empty()) return 0.0;
  return static_cast<double>(multiset_intersection(used, required)) /
         static_cast<double>(used.size());
}

double recall(const ToolMultiset& used, const ToolMultiset& required) {
  if (required.empty()) {
    throw Error(ErrorCode::EmptyRequirement, "recall needs at least one required tool");
  }
  return static_cast<double>(multiset_intersection(used, required)) /
         static_cast<double>(required.size());
}

double match_rate(const std::vector<bool>& correct) {
  if (correct.empty()) throw Error(ErrorCode::EmptySet, "match rate of an empty set");
  const auto n = std::count(correct.begin(), correct.end(), true);
  return static_cast<double>(n) / static_cast<double>(correct.size());
}

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "Easy";
    case Difficulty::Medium: return "Medium";
    case Difficulty::Difficult: return "Difficult";
  }
  return "Easy";
}

Difficulty bucket_difficulty(std::size_t required_tool_count) {
  if (required_tool_count <= 1) return Difficulty::Easy;
  if (required_tool_count == 2) return Difficulty::Medium;
  return Difficulty::Difficult;
}

std::string_view to_string(ErrorClass e) {
  switch (e) {
    case ErrorClass::Misunderstood: return "Misunderstood Query";
    case ErrorClass::InsufficientTools: return "Insufficient Tools Used";
    case ErrorClass::IncorrectTools: return "Incorrect Tools Used";
    case ErrorClass::TooComplex: return "Too Complex";
  }
  return "Too Complex";
}

std::optional<ErrorClass> classify_error(double p, double r, bool correct) {
  if (correct) return std::nullopt;
  if (p == 0.0 && r == 0.0) return ErrorClass::TooComplex;
  if (p == 1.0 && r == 1.0) return ErrorClass::Misunderstood;
  if (r < p) return ErrorClass::InsufficientTools;
  // P < R, and the P == R in (0,1) case: irrelevant tools were picked.
  return ErrorClass::IncorrectTools;
}

McNemarResult mcnemar(std::uint64_t b, std::uint64_t c) {
  const std::uint64_t n = b + c;
  if (n == 0) throw Error(ErrorCode::NoDiscordantPairs, "McNemar test needs discordant pairs");
  McNemarResult r;
  const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
  r.statistic = diff * diff / static_cast<double>(n);
  // Upper tail of chi-square with one degree of freedom.
  r.p_value = std::erfc(std::sqrt(r.statistic / 2.0));
  if (n < 25) {
    const std::uint64_t k = std::min(b, c);
    double tail = 0.0;
    for (std::uint64_t i = 0; i <= k; ++i) {
      tail += std::exp(std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(i) + 1) -
                       std::lgamma(static_cast<double>(n - i) + 1) - static_cast<double>(n) * std::log(2.0));
    }
    r.exact_p_value = std::min(1.0, 2.0 * tail);
  }
  return r;
}

LatencyEstimate estimate_latency(int tool_count, Range tool_ms, Range api_s) {
  if (tool_count < 1) throw Error(ErrorCode::BadInput, "latency estimate needs at least one tool");
  LatencyEstimate e;
  e.rounds = tool_count + 2;
  e.total_s.lo = tool_count * tool_ms.lo / 1000.0 + e.rounds * api_s.lo;
  e.total_s.hi = tool_count * tool_ms.hi / 1000.0 + e.rounds * api_s.hi;
  return e;
}

}  // namespace changegpt
