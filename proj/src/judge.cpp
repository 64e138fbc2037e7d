#include <cmath>
#include <regex>

#include "changegpt/error.hpp"
#include "changegpt/eval.hpp"
#include "changegpt/text.hpp"

namespace changegpt {

using nlohmann::json;

namespace {

// Numbers standing alone: not glued to letters, digits or '_' on either side,
// so ids like "be9519_5092de" and sizes like "64x64" do not count.
const std::regex& number_pattern() {
  static const std::regex re(
      R"((^|[^a-z0-9_.])([-+]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?|[-+]?\.\d+)(?![a-z0-9_]))",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& yes_no_pattern() {
  static const std::regex re(R"((^|[^a-z0-9])(yes|no)(?![a-z0-9]))", std::regex::ECMAScript);
  return re;
}

std::string regex_escape(std::string_view s) {
  static const std::string kSpecial = R"(\^$.|?*+()[]{})";
  std::string out;
  for (char c : s) {
    if (kSpecial.find(c) != std::string::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

// Phrase match tolerant of separators between words and a plural suffix.
std::regex phrase_pattern(std::string_view phrase) {
  const std::string words = normalize_words(phrase);
  std::string body;
  for (auto word : split(words, ' ')) {
    if (word.empty()) continue;
    if (!body.empty()) body += "[^a-z0-9]+";
    body += regex_escape(word);
  }
  return std::regex("(^|[^a-z0-9])(" + body + "(?:s|es)?)(?![a-z0-9])", std::regex::ECMAScript);
}

// Result of matching one matcher against text[from..]: end offset on success.
struct Match {
  bool ok = false;
  std::size_t end = 0;
  bool no_number = false;
};

bool within(double got, const NumericAnswer& n) {
  const double slack = 1e-9;
  if (std::abs(n.value) > 1.0) {
    return std::abs(got - n.value) <= n.tolerance * std::abs(n.value) + slack;
  }
  return std::abs(got - n.value) <= n.tolerance + slack;
}

Match match_from(const std::string& text, std::size_t from, const AnswerSpec& spec);

Match match_boolean(const std::string& text, std::size_t from, const BooleanAnswer& b) {
  std::smatch m;
  const auto begin = text.begin() + static_cast<std::ptrdiff_t>(from);
  if (!std::regex_search(begin, text.end(), m, yes_no_pattern())) return {};
  const bool said_yes = m[2].str() == "yes";
  const auto end = from + static_cast<std::size_t>(m.position(2) + m.length(2));
  return {said_yes == b.yes, end, false};
}

Match match_numeric(const std::string& text, std::size_t from, const NumericAnswer& n) {
  std::smatch m;
  const auto begin = text.begin() + static_cast<std::ptrdiff_t>(from);
  if (!std::regex_search(begin, text.end(), m, number_pattern())) return {false, 0, true};
  std::string digits = m[2].str();
  std::erase(digits, ',');
  const double got = std::stod(digits);
  const auto end = from + static_cast<std::size_t>(m.position(2) + m.length(2));
  return {within(got, n), end, false};
}

Match match_categorical(const std::string& text, std::size_t from, const CategoricalAnswer& c) {
  std::optional<std::size_t> best_start;
  std::size_t best_end = 0;
  const auto begin = text.begin() + static_cast<std::ptrdiff_t>(from);
  for (const auto& name : c.accepted) {
    if (trim(name).empty()) continue;
    std::smatch m;
    if (!std::regex_search(begin, text.end(), m, phrase_pattern(name))) continue;
    const auto start = static_cast<std::size_t>(m.position(2));
    if (!best_start || start < *best_start) {
      best_start = start;
      best_end = from + start + static_cast<std::size_t>(m.length(2));
    }
  }
  return {best_start.has_value(), best_end, false};
}

Match match_checklist(const std::string& text, std::size_t from, const ChecklistAnswer& list) {
  if (list.items.empty()) return {};
  std::size_t cursor = from;
  for (const auto& item : list.items) {
    const auto m = match_from(text, cursor, item);
    if (!m.ok) return {false, 0, m.no_number};
    cursor = m.end;
  }
  return {true, cursor, false};
}

Match match_from(const std::string& text, std::size_t from, const AnswerSpec& spec) {
  return std::visit(
      [&](const auto& kind) -> Match {
        using T = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<T, BooleanAnswer>) return match_boolean(text, from, kind);
        if constexpr (std::is_same_v<T, NumericAnswer>) return match_numeric(text, from, kind);
        if constexpr (std::is_same_v<T, CategoricalAnswer>) return match_categorical(text, from, kind);
        if constexpr (std::is_same_v<T, ChecklistAnswer>) return match_checklist(text, from, kind);
      },
      spec.kind);
}

}  // namespace

std::vector<double> extract_numbers(std::string_view text) {
  const std::string s = to_lower(text);
  std::vector<double> out;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), number_pattern());
       it != std::sregex_iterator(); ++it) {
    std::string digits = (*it)[2].str();
    std::erase(digits, ',');
    out.push_back(std::stod(digits));
  }
  return out;
}

Judgement judge(std::string_view answer, const AnswerSpec& spec) {
  const std::string text = to_lower(answer);
  const auto m = match_from(text, 0, spec);
  return {m.ok, m.no_number};
}

AnswerSpec answer_spec_from_json(const json& j) {
  const auto kind = to_lower(j.at("kind").get<std::string>());
  if (kind == "boolean") {
    const auto& v = j.at("value");
    bool yes = v.is_boolean() ? v.get<bool>() : to_lower(v.get<std::string>()) == "yes";
    return {BooleanAnswer{yes}};
  }
  if (kind == "numeric") {
    NumericAnswer n;
    n.value = j.at("value").get<double>();
    if (j.contains("tolerance")) {
      n.tolerance = j.at("tolerance").get<double>();
    } else {
      // Integer counts must match exactly; anything else gets 1%.
      n.tolerance = std::floor(n.value) == n.value ? 0.0 : 0.01;
    }
    if (n.tolerance < 0.0) throw Error(ErrorCode::DatasetError, "numeric tolerance must be >= 0");
    return {n};
  }
  if (kind == "categorical") {
    CategoricalAnswer c;
    c.accepted = j.at("accepted").get<std::vector<std::string>>();
    if (c.accepted.empty()) throw Error(ErrorCode::DatasetError, "categorical answer needs names");
    return {c};
  }
  if (kind == "checklist") {
    ChecklistAnswer c;
    for (const auto& item : j.at("items")) c.items.push_back(answer_spec_from_json(item));
    if (c.items.empty()) throw Error(ErrorCode::DatasetError, "checklist needs at least one item");
    return {c};
  }
  throw Error(ErrorCode::DatasetError, "unknown answer kind '" + kind + "'");
}

json answer_spec_to_json(const AnswerSpec& spec) {
  return std::visit(
      [](const auto& kind) -> json {
        using T = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<T, BooleanAnswer>) {
          return {{"kind", "boolean"}, {"value", kind.yes}};
        } else if constexpr (std::is_same_v<T, NumericAnswer>) {
          return {{"kind", "numeric"}, {"value", kind.value}, {"tolerance", kind.tolerance}};
        } else if constexpr (std::is_same_v<T, CategoricalAnswer>) {
          return {{"kind", "categorical"}, {"accepted", kind.accepted}};
        } else {
          json items = json::array();
          for (const auto& i : kind.items) items.push_back(answer_spec_to_json(i));
          return {{"kind", "checklist"}, {"items", items}};
        }
      },
      spec.kind);
}

}  // namespace changegpt
