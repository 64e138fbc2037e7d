#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "changegpt/images.hpp"
#include "changegpt/memory.hpp"

namespace changegpt {

/// Everything one conversation owns: images, reference log, dialogue history.
/// Not thread-safe; one query at a time per session.
class Session {
 public:
  explicit Session(std::string id = "local", std::shared_ptr<IdMinter> minter = nullptr,
                   std::unique_ptr<Clock> clock = nullptr);

  [[nodiscard]] const std::string& id() const { return id_; }
  [[nodiscard]] std::int64_t created_at_ms() const { return created_at_ms_; }

  ImageRegistry& images() { return images_; }
  [[nodiscard]] const ImageRegistry& images() const { return images_; }
  ReferenceLog& log() { return log_; }
  [[nodiscard]] const ReferenceLog& log() const { return log_; }
  DialogueHistory& history() { return history_; }
  [[nodiscard]] const DialogueHistory& history() const { return history_; }
  Clock& clock() { return *clock_; }

  std::string mint_id() { return images_.minter().mint(); }

  // Registration wrappers that also record the event in the reference log.
  const ImageRecord& register_image(std::span<const std::uint8_t> png, RoleKind role,
                                    std::optional<std::string> pair_id = std::nullopt);
  const ImageRecord& register_payload(ImagePayload payload, RoleKind role,
                                      std::optional<std::string> pair_id = std::nullopt);
  const ImageRecord& crop_and_register(const std::string& parent_id, const CropRegion& region);
  const ImageRecord& register_derived(const std::string& parent_id, std::string tag,
                                      ImagePayload payload);

  /// History visible to 1-based round h (turns 1..h-1).
  [[nodiscard]] DialogueHistory history_view(std::size_t round) const {
    return history_.view(round);
  }

  /// Writes state.json plus images/<filename> for every record.
  void export_to(const std::filesystem::path& dir) const;
  static std::unique_ptr<Session> import_from(const std::filesystem::path& dir,
                                              std::shared_ptr<IdMinter> minter = nullptr,
                                              std::unique_ptr<Clock> clock = nullptr);

 private:
  const ImageRecord& logged(const ImageRecord& rec);

  std::string id_;
  std::unique_ptr<Clock> clock_;
  std::int64_t created_at_ms_ = 0;
  ImageRegistry images_;
  ReferenceLog log_;
  DialogueHistory history_;
};

}  // namespace changegpt
