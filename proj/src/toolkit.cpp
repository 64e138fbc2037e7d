#include "changegpt/toolkit.hpp"

#include <openssl/evp.h>

#include <json.hpp>

#include "changegpt/error.hpp"
#include "changegpt/text.hpp"

namespace changegpt {

using nlohmann::json;

std::string_view to_string(BackingKind kind) {
  switch (kind) {
    case BackingKind::Native: return "native";
    case BackingKind::Stub: return "stub";
    case BackingKind::Remote: return "remote";
  }
  return "native";
}

namespace {

std::string unquote(std::string_view v) {
  v = trim(v);
  while (v.size() >= 2 && (v.front() == '"' || v.front() == '\'' || v.front() == '`') &&
         v.back() == v.front()) {
    v = trim(v.substr(1, v.size() - 2));
  }
  return std::string(v);
}

}  // namespace

ToolArgs ToolArgs::parse(std::string_view input) {
  ToolArgs args;
  args.raw_ = std::string(trim(input));
  const std::string body = unquote(input);
  if (body.empty()) return args;

  if (body.front() == '{') {
    try {
      const auto obj = json::parse(body);
      for (const auto& [k, v] : obj.items()) {
        args.values_[to_lower(trim(k))] = v.is_string() ? v.get<std::string>() : v.dump();
      }
      return args;
    } catch (const json::exception&) {
      throw Error(ErrorCode::BadInput, "Action Input looks like JSON but does not parse");
    }
  }

  bool first = true;
  for (auto part : split(body, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) {
      if (first && !args.values_.contains("image")) {
        args.values_["image"] = unquote(part);
      } else {
        throw Error(ErrorCode::BadInput,
                    "expected key=value in Action Input, got '" + std::string(part) + "'");
      }
    } else {
      const std::string key = to_lower(trim(part.substr(0, eq)));
      if (key.empty()) {
        throw Error(ErrorCode::BadInput, "empty key in Action Input");
      }
      args.values_[key] = unquote(part.substr(eq + 1));
    }
    first = false;
  }
  return args;
}

std::optional<std::string> ToolArgs::get(std::string_view key) const {
  if (auto it = values_.find(key); it != values_.end() && !it->second.empty()) {
    return it->second;
  }
  return std::nullopt;
}

std::string ToolArgs::require(std::string_view key) const {
  auto v = get(key);
  if (!v) {
    throw Error(ErrorCode::BadInput,
                "missing '" + std::string(key) + "=' in Action Input '" + raw_ + "'");
  }
  return *v;
}

std::optional<std::filesystem::path> FixtureStore::locate(std::string_view tool,
                                                          std::string_view key,
                                                          std::string_view ext) const {
  if (!configured()) return std::nullopt;
  auto path = root_ / std::string(tool) / (std::string(key) + "." + std::string(ext));
  if (std::filesystem::is_regular_file(path)) return path;
  return std::nullopt;
}

std::filesystem::path FixtureStore::require(std::string_view tool, std::string_view key,
                                            std::string_view ext) const {
  if (!configured()) {
    throw Error(ErrorCode::FixtureMissing,
                "no fixture directory configured for " + std::string(tool));
  }
  auto path = locate(tool, key, ext);
  if (!path) {
    throw Error(ErrorCode::FixtureMissing, "no " + std::string(tool) + " result for '" +
                                               std::string(key) + "'");
  }
  return *path;
}

ChangeMask FixtureStore::change_mask(std::string_view tool, std::string_view key) const {
  return decode_change_mask(read_file(require(tool, key, "png")));
}

LabelMask FixtureStore::label_mask(std::string_view tool, std::string_view key) const {
  return decode_label_mask(read_file(require(tool, key, "png")));
}

std::string FixtureStore::text(std::string_view tool, std::string_view key) const {
  return std::string(trim(read_text_file(require(tool, key, "txt"))));
}

DetectionSet FixtureStore::detections(std::string_view tool, std::string_view key) const {
  const auto path = require(tool, key, "json");
  DetectionSet set;
  try {
    auto doc = json::parse(read_text_file(path));
    const json& list = doc.is_array() ? doc : doc.at("detections");
    for (const auto& d : list) {
      const auto& box = d.at("box");
      set.entries.push_back({d.at("class").get<std::string>(),
                             CropRegion{box.at(0).get<int>(), box.at(1).get<int>(),
                                        box.at(2).get<int>(), box.at(3).get<int>()},
                             d.value("score", 1.0)});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadInput, "malformed detection fixture " + path.string() + ": " + e.what());
  }
  return set;
}

ToolRegistry::ToolRegistry(ToolkitConfig config)
    : config_(std::move(config)), fixtures_(config_.fixtures_dir) {}

void ToolRegistry::register_tool(ToolSpec spec, ToolHandler handler) {
  if (spec.name.empty() || spec.name.find_first_of(" \t\r\n,") != std::string::npos) {
    throw Error(ErrorCode::BadInput, "tool name must be a single token: '" + spec.name + "'");
  }
  if (trim(spec.description).empty()) {
    throw Error(ErrorCode::BadInput, "tool '" + spec.name + "' needs a description");
  }
  if (find(spec.name) != nullptr) {
    throw Error(ErrorCode::DuplicateName, "tool '" + spec.name + "' already registered");
  }
  tools_.push_back({std::move(spec), std::move(handler)});
}

const ToolSpec* ToolRegistry::find(std::string_view name) const {
  for (const auto& e : tools_) {
    if (e.spec.name == name) return &e.spec;
  }
  return nullptr;
}

std::vector<const ToolSpec*> ToolRegistry::list() const {
  std::vector<const ToolSpec*> out;
  for (const auto& e : tools_) out.push_back(&e.spec);
  return out;
}

RenderedTools ToolRegistry::render_tool_prompt() const {
  if (tools_.empty()) throw Error(ErrorCode::EmptyRegistry, "no tools registered");
  RenderedTools out;
  for (std::size_t i = 0; i < tools_.size(); ++i) {
    const auto& spec = tools_[i].spec;
    if (i > 0) {
      out.tools_block += "\n";
      out.tool_names += ", ";
    }
    out.tools_block += spec.name + ": " + spec.description;
    out.tool_names += spec.name;
  }
  return out;
}

ToolInvocation ToolRegistry::invoke(Session& session, std::string_view tool,
                                    std::string_view input) const {
  const Entry* entry = nullptr;
  for (const auto& e : tools_) {
    if (e.spec.name == tool) entry = &e;
  }
  auto& clock = session.clock();
  const auto start = clock.now_ms();
  const std::string call = std::string(tool) + "[" + std::string(trim(input)) + "]";
  if (entry == nullptr) {
    session.log().append(start, LogKind::ToolCall, call + " -> error: unknown tool");
    throw Error(ErrorCode::UnknownTool, "'" + std::string(tool) + "' is not a valid tool");
  }
  try {
    ToolContext ctx{session, config_, fixtures_};
    auto out = entry->handler(ctx, ToolArgs::parse(input));
    const auto end = clock.now_ms();
    session.log().append(end, LogKind::ToolCall, call + " -> " + out.observation);
    return {std::string(tool), std::string(trim(input)), std::move(out.observation),
            std::move(out.produced_images), end - start};
  } catch (const Error& e) {
    session.log().append(clock.now_ms(), LogKind::ToolCall,
                         call + " -> error: " + std::string(e.what()));
    throw;
  }
}

std::string base64_encode(std::span<const std::uint8_t> data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes base64_decode(std::string_view text) {
  std::string clean;
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
  }
  if (clean.size() % 4 != 0) throw Error(ErrorCode::BadInput, "invalid base64 length");
  Bytes out(3 * clean.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw Error(ErrorCode::BadInput, "invalid base64 payload");
  std::size_t pad = 0;
  if (!clean.empty() && clean.back() == '=') ++pad;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

}  // namespace changegpt
