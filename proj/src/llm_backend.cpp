#include "changegpt/llm_backend.hpp"

#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "changegpt/error.hpp"
#include "changegpt/http_url.hpp"
#include "changegpt/png_io.hpp"

namespace changegpt {

using nlohmann::json;

std::string truncate_at_stop(std::string_view text, const std::vector<std::string>& stops) {
  std::size_t cut = text.size();
  for (const auto& s : stops) {
    if (s.empty()) continue;
    cut = std::min(cut, text.find(s));
  }
  return std::string(text.substr(0, cut));
}

std::vector<std::string> ScriptedBackend::parse_script(const json& doc) {
  if (!doc.is_array()) {
    throw Error(ErrorCode::BadInput, "script must be a JSON array");
  }
  std::vector<std::string> out;
  for (const auto& item : doc) {
    if (item.is_string()) {
      out.push_back(item.get<std::string>());
    } else if (item.is_object() && item.contains("completion")) {
      out.push_back(item.at("completion").get<std::string>());
    } else {
      throw Error(ErrorCode::BadInput, "script entries must be strings or {completion} objects");
    }
  }
  return out;
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
  try {
    return std::make_unique<ScriptedBackend>(parse_script(json::parse(read_text_file(path))));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadInput, "cannot parse script " + path.string() + ": " + e.what());
  }
}

std::string ScriptedBackend::complete(const CompletionRequest&) {
  std::lock_guard lock(mutex_);
  if (cursor_ >= entries_.size()) {
    throw Error(ErrorCode::ScriptExhausted,
                "scripted backend exhausted after " + std::to_string(entries_.size()) + " entries");
  }
  return entries_[cursor_++];
}

std::size_t ScriptedBackend::cursor() const {
  std::lock_guard lock(mutex_);
  return cursor_;
}

HttpBackendConfig HttpBackendConfig::from_env() {
  auto env = [](const char* name) {
    const char* v = std::getenv(name);
    return v != nullptr ? std::string(v) : std::string{};
  };
  HttpBackendConfig c;
  c.base_url = env("CHANGEGPT_BASE_URL");
  c.api_key = env("CHANGEGPT_API_KEY");
  c.model = env("CHANGEGPT_MODEL");
  if (c.base_url.empty()) c.base_url = "https://api.openai.com/v1";
  if (c.model.empty()) c.model = "gpt-4-turbo";
  return c;
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw Error(ErrorCode::BadInput, "base URL not configured");
  while (!config_.base_url.empty() && config_.base_url.back() == '/') config_.base_url.pop_back();
}

json HttpChatBackend::build_body(const CompletionRequest& request) const {
  json messages = json::array();
  if (!request.system.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system}});
  }
  messages.push_back({{"role", "user"}, {"content", request.prompt}});
  // The configured temperature always wins over the per-request value.
  return {{"model", config_.model},
          {"messages", std::move(messages)},
          {"temperature", config_.temperature},
          {"stop", request.stop_sequences}};
}

void validate_chat_request(const json& body) {
  auto fail = [](const std::string& why) {
    throw Error(ErrorCode::BadInput, "invalid chat request: " + why);
  };
  if (!body.is_object()) fail("body is not an object");
  if (!body.contains("model") || !body["model"].is_string() || body["model"].get<std::string>().empty()) {
    fail("model must be a non-empty string");
  }
  if (!body.contains("messages") || !body["messages"].is_array() || body["messages"].empty()) {
    fail("messages must be a non-empty array");
  }
  for (const auto& m : body["messages"]) {
    if (!m.is_object() || !m.contains("role") || !m["role"].is_string() || !m.contains("content") ||
        !m["content"].is_string()) {
      fail("each message needs string role and content");
    }
    const auto role = m["role"].get<std::string>();
    if (role != "system" && role != "user" && role != "assistant") fail("unknown role " + role);
  }
  if (!body.contains("temperature") || !body["temperature"].is_number()) fail("temperature missing");
  const double t = body["temperature"].get<double>();
  if (t < 0.0 || t > 2.0) fail("temperature outside [0,2]");
  if (body.contains("stop")) {
    if (!body["stop"].is_array() || body["stop"].size() > 4) fail("stop must be an array of <= 4");
    for (const auto& s : body["stop"]) {
      if (!s.is_string()) fail("stop entries must be strings");
    }
  }
}

std::string HttpChatBackend::complete(const CompletionRequest& request) {
  const json body = build_body(request);
  validate_chat_request(body);
  const auto url = split_url(config_.base_url + "/chat/completions");

  httplib::Client client(url.origin);
  const auto secs = static_cast<time_t>(config_.timeout.count());
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  client.set_write_timeout(secs);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  auto delay = config_.backoff;
  for (int attempt = 0;; ++attempt) {
    auto res = client.Post(url.path, headers, body.dump(), "application/json");
    if (!res) {
      const auto err = res.error();
      if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout ||
          err == httplib::Error::Write) {
        throw Error(ErrorCode::Timeout, "completion request timed out: " + httplib::to_string(err));
      }
      throw Error(ErrorCode::HttpError, "completion request failed: " + httplib::to_string(err));
    }
    const bool retryable = res->status == 429 || res->status >= 500;
    if (retryable && attempt < config_.max_retries) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
      continue;
    }
    if (res->status != 200) throw HttpStatusError(res->status, res->body);
    try {
      const auto doc = json::parse(res->body);
      const auto& content = doc.at("choices").at(0).at("message").at("content");
      return truncate_at_stop(content.is_string() ? content.get<std::string>() : std::string{},
                              request.stop_sequences);
    } catch (const json::exception& e) {
      throw HttpStatusError(res->status, std::string("unexpected response shape: ") + e.what());
    }
  }
}

RecordingBackend::RecordingBackend(std::unique_ptr<CompletionBackend> inner,
                                   std::filesystem::path sink)
    : inner_(std::move(inner)), sink_(std::move(sink)) {
  flush();
}

std::string RecordingBackend::complete(const CompletionRequest& request) {
  auto completion = inner_->complete(request);
  std::lock_guard lock(mutex_);
  entries_.push_back({{"prompt", request.prompt}, {"completion", completion}});
  flush();
  return completion;
}

void RecordingBackend::flush() const {
  try {
    write_text_file(sink_, entries_.dump(2));
  } catch (const Error& e) {
    throw Error(ErrorCode::IoError, std::string("cannot write recording: ") + e.what());
  }
}

}  // namespace changegpt
