#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "changegpt/raster.hpp"
#include "changegpt/session.hpp"

namespace changegpt {

enum class BackingKind { Native, Stub, Remote };

struct Backing {
  BackingKind kind = BackingKind::Native;
  std::string endpoint;  // Remote only
};

std::string_view to_string(BackingKind kind);

struct ToolSpec {
  std::string name;
  std::string description;
  std::string arg_grammar;
  Backing backing;
};

/// Parsed Action Input: comma-separated key=value pairs. Keys are trimmed and
/// lowercased; a bare leading value is taken as `image`.
class ToolArgs {
 public:
  static ToolArgs parse(std::string_view input);

  [[nodiscard]] std::optional<std::string> get(std::string_view key) const;
  /// Throws BadInput naming the missing key.
  [[nodiscard]] std::string require(std::string_view key) const;
  [[nodiscard]] const std::map<std::string, std::string, std::less<>>& values() const {
    return values_;
  }
  [[nodiscard]] const std::string& raw() const { return raw_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
  std::string raw_;
};

/// Reads deterministic stand-in artifacts from `<root>/<tool>/<key>.<ext>`.
class FixtureStore {
 public:
  FixtureStore() = default;
  explicit FixtureStore(std::filesystem::path root) : root_(std::move(root)) {}

  [[nodiscard]] bool configured() const { return !root_.empty(); }
  [[nodiscard]] const std::filesystem::path& root() const { return root_; }

  [[nodiscard]] std::optional<std::filesystem::path> locate(std::string_view tool,
                                                            std::string_view key,
                                                            std::string_view ext) const;

  // Each throws FixtureMissing when no artifact exists for (tool, key).
  [[nodiscard]] ChangeMask change_mask(std::string_view tool, std::string_view key) const;
  [[nodiscard]] LabelMask label_mask(std::string_view tool, std::string_view key) const;
  [[nodiscard]] std::string text(std::string_view tool, std::string_view key) const;
  [[nodiscard]] DetectionSet detections(std::string_view tool, std::string_view key) const;

 private:
  [[nodiscard]] std::filesystem::path require(std::string_view tool, std::string_view key,
                                              std::string_view ext) const;
  std::filesystem::path root_;
};

struct ToolkitConfig {
  std::filesystem::path fixtures_dir;
  double min_score = kDefaultMinScore;
  double whether_min_fraction = 0.0;
  int pixel_tolerance = 0;
  /// Tools listed here are backed by a remote service instead of fixtures.
  std::map<std::string, std::string> remote_endpoints;
  int remote_timeout_s = 60;
};

struct ToolOutput {
  std::string observation;
  std::vector<std::string> produced_images;  // self_ids
};

struct ToolContext {
  Session& session;
  const ToolkitConfig& config;
  const FixtureStore& fixtures;
};

using ToolHandler = std::function<ToolOutput(ToolContext&, const ToolArgs&)>;

struct ToolInvocation {
  std::string tool;
  std::string input;
  std::string observation;
  std::vector<std::string> produced_images;
  std::int64_t duration_ms = 0;
};

struct RenderedTools {
  std::string tools_block;
  std::string tool_names;
};

class ToolRegistry {
 public:
  explicit ToolRegistry(ToolkitConfig config = {});

  /// Throws DuplicateName.
  void register_tool(ToolSpec spec, ToolHandler handler);

  [[nodiscard]] const ToolSpec* find(std::string_view name) const;
  [[nodiscard]] std::vector<const ToolSpec*> list() const;
  [[nodiscard]] std::size_t size() const { return tools_.size(); }
  [[nodiscard]] const ToolkitConfig& config() const { return config_; }

  /// One "name: description" line per tool plus comma-separated names, both
  /// in registration order. Throws EmptyRegistry.
  [[nodiscard]] RenderedTools render_tool_prompt() const;

  /// Runs a registered tool and logs the call. Throws UnknownTool for names
  /// outside the registry, and propagates BadInput / FixtureMissing / etc.
  ToolInvocation invoke(Session& session, std::string_view tool, std::string_view input) const;

 private:
  struct Entry {
    ToolSpec spec;
    ToolHandler handler;
  };
  ToolkitConfig config_;
  FixtureStore fixtures_;
  std::vector<Entry> tools_;
};

/// The eight tools: six stubbed vision models and two native calculators.
ToolRegistry make_default_registry(ToolkitConfig config = {});

inline constexpr std::string_view kBinaryChangeDetection = "binary_change_detection";
inline constexpr std::string_view kImageCaptioning = "image_captioning";
inline constexpr std::string_view kSceneClassification = "scene_classification";
inline constexpr std::string_view kSemanticSegmentation = "semantic_segmentation";
inline constexpr std::string_view kObjectDetection = "object_detection";
inline constexpr std::string_view kObjectCounting = "object_counting";
inline constexpr std::string_view kPixelCounting = "pixel_counting";
inline constexpr std::string_view kWhetherChange = "whether_change";

/// Handler that forwards the call to a JSON-over-HTTP tool service.
ToolHandler make_remote_handler(std::string tool_name, std::string endpoint, int timeout_s);

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);

}  // namespace changegpt
