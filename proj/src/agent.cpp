#include "changegpt/agent.hpp"

#include <fstream>

#include "changegpt/error.hpp"
#include "changegpt/png_io.hpp"
#include "changegpt/text.hpp"

namespace changegpt {

using nlohmann::json;

BackendSelector BackendSelector::parse(std::string_view text) {
  const auto t = trim(text);
  if (iequals(t, "http")) return {Kind::Http, {}};
  constexpr std::string_view kScripted = "scripted:";
  if (t.size() > kScripted.size() && iequals(t.substr(0, kScripted.size()), kScripted)) {
    return {Kind::Scripted, std::filesystem::path(std::string(t.substr(kScripted.size())))};
  }
  throw Error(ErrorCode::BadInput,
              "backend must be 'http' or 'scripted:<path>', got '" + std::string(t) + "'");
}

std::string BackendSelector::str() const {
  return kind == Kind::Http ? "http" : "scripted:" + path.string();
}

BackendFactory::BackendFactory(BackendSelector selector, std::optional<HttpBackendConfig> http)
    : selector_(std::move(selector)) {
  if (selector_.kind == BackendSelector::Kind::Http) {
    http_ = http ? std::move(*http) : HttpBackendConfig::from_env();
  } else if (!std::filesystem::exists(selector_.path)) {
    throw Error(ErrorCode::IoError, "script source not found: " + selector_.path.string());
  }
}

namespace {

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadInput, path.string() + ": " + e.what());
  }
}

}  // namespace

std::unique_ptr<CompletionBackend> BackendFactory::create(std::string_view key) const {
  if (selector_.kind == BackendSelector::Kind::Http) return std::make_unique<HttpChatBackend>(http_);

  const auto& src = selector_.path;
  if (std::filesystem::is_directory(src)) {
    for (auto name : {std::string(key), std::string("default")}) {
      if (name.empty()) continue;
      const auto file = src / (name + ".json");
      if (std::filesystem::exists(file)) {
        return std::make_unique<ScriptedBackend>(ScriptedBackend::parse_script(read_json(file)));
      }
    }
    throw Error(ErrorCode::BadInput, "no script for '" + std::string(key) + "' in " + src.string());
  }

  const json doc = read_json(src);
  if (doc.is_array()) return std::make_unique<ScriptedBackend>(ScriptedBackend::parse_script(doc));
  if (doc.is_object()) {
    for (auto name : {std::string(key), std::string("default")}) {
      if (doc.contains(name)) {
        return std::make_unique<ScriptedBackend>(ScriptedBackend::parse_script(doc.at(name)));
      }
    }
  }
  throw Error(ErrorCode::BadInput, "no script for '" + std::string(key) + "' in " + src.string());
}

std::unique_ptr<Session> make_replay_session(std::string id) {
  return std::make_unique<Session>(std::move(id), std::make_shared<IdMinter>(),
                                   std::make_unique<LogicalClock>());
}

void prepare_session(Session& session, const Question& q) {
  const auto& pre = session.register_image(read_file(q.pre), RoleKind::Pre, q.pair_id);
  const auto pre_id = pre.self_id;
  const auto& cur = session.register_image(read_file(q.cur), RoleKind::Cur, pre.link_id);
  const auto cur_id = cur.self_id;
  if (!q.crop) return;
  const auto parent = q.crop->parent;
  if (parent == CropParent::Pre || parent == CropParent::Both) {
    session.crop_and_register(pre_id, q.crop->region);
  }
  if (parent == CropParent::Cur || parent == CropParent::Both) {
    session.crop_and_register(cur_id, q.crop->region);
  }
}

AgentRun run_question(const Question& q, const ToolRegistry& registry, CompletionBackend& backend,
                      const AgentConfig& config) {
  auto session = make_replay_session(q.id);
  prepare_session(*session, q);
  const auto outcome = run_query(*session, q.text, backend, registry, config);
  AgentRun run;
  run.answer = outcome.answer;
  run.tools_used = outcome.trace.tools_used();
  run.latency_ms = outcome.trace.total_ms;
  run.status = std::string(to_string(outcome.trace.status));
  run.trace = trace_to_json(outcome.trace);
  return run;
}

AgentRunner make_agent_runner(const ToolRegistry& registry, const BackendFactory& backends,
                              AgentConfig config) {
  return [&registry, &backends, config](const Question& q) {
    auto backend = backends.create(q.id);
    return run_question(q, registry, *backend, config);
  };
}

}  // namespace changegpt
