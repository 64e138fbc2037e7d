#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace changegpt {

/// Millisecond time source. Deterministic sessions use LogicalClock so that
/// traces replay byte-identically.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() = 0;
};

class SystemClock final : public Clock {
 public:
  std::int64_t now_ms() override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }
};

/// Advances by a fixed tick on every read.
class LogicalClock final : public Clock {
 public:
  explicit LogicalClock(std::int64_t tick_ms = 1) : tick_(tick_ms) {}
  std::int64_t now_ms() override { return now_ += tick_; }

 private:
  std::int64_t now_ = 0;
  std::int64_t tick_;
};

enum class LogKind { Query, Step, ToolCall, ImageRegistered, Answer };

std::string_view to_string(LogKind kind);
LogKind log_kind_from_string(std::string_view s);

struct LogEntry {
  std::int64_t timestamp_ms = 0;
  LogKind kind = LogKind::Query;
  std::string payload;
};

/// Append-only record of everything the agent did in a session.
class ReferenceLog {
 public:
  void append(std::int64_t timestamp_ms, LogKind kind, std::string payload) {
    entries_.push_back({timestamp_ms, kind, std::move(payload)});
  }
  [[nodiscard]] const std::vector<LogEntry>& entries() const { return entries_; }
  [[nodiscard]] std::vector<LogEntry> tail(std::size_t n) const {
    const auto start = entries_.size() > n ? entries_.size() - n : 0;
    return {entries_.begin() + static_cast<std::ptrdiff_t>(start), entries_.end()};
  }

 private:
  std::vector<LogEntry> entries_;
};

struct Turn {
  std::string query;
  std::string answer;

  friend bool operator==(const Turn&, const Turn&) = default;
};

class DialogueHistory {
 public:
  void append(Turn turn) { turns_.push_back(std::move(turn)); }
  [[nodiscard]] const std::vector<Turn>& turns() const { return turns_; }

  /// Turns visible at 1-based round `h`: exactly turns 1..h-1.
  [[nodiscard]] DialogueHistory view(std::size_t round) const {
    DialogueHistory out;
    const std::size_t n = round == 0 ? 0 : std::min(round - 1, turns_.size());
    out.turns_.assign(turns_.begin(), turns_.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
  }

  /// "Human: q\nAI: a" lines, one pair per turn.
  [[nodiscard]] std::string render() const;

 private:
  std::vector<Turn> turns_;
};

}  // namespace changegpt
