#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "changegpt/png_io.hpp"
#include "changegpt/raster.hpp"

namespace changegpt {

/// Issues 6-character lowercase hex ids, never repeating one it has issued.
/// Seeded so that a replayed session mints the same sequence.
class IdMinter {
 public:
  explicit IdMinter(std::uint64_t seed = kDefaultSeed) : rng_(seed) {}

  std::string mint();
  /// Marks an externally supplied id (e.g. a caller-chosen pair id) as taken.
  void reserve(const std::string& id);
  [[nodiscard]] bool issued(const std::string& id) const;

  static constexpr std::uint64_t kDefaultSeed = 0x9e3779b97f4a7c15ULL;

 private:
  mutable std::mutex mutex_;
  std::mt19937_64 rng_;
  std::set<std::string> issued_;
};

bool is_hex_id(std::string_view s);

enum class RoleKind { Pre, Cur, CropPre, CropCur, Derived };

struct ImageRole {
  RoleKind kind = RoleKind::Pre;
  std::string tag;  // Derived only

  /// "pre", "cur", "crppre", "crpcur" or the derived tag.
  [[nodiscard]] std::string token() const;
  static ImageRole from_token(std::string_view token);

  friend bool operator==(const ImageRole&, const ImageRole&) = default;
};

struct ImageRecord {
  std::string self_id;
  std::string link_id;
  ImageRole role;
  std::string filename;
  int width = 0;
  int height = 0;
  std::optional<CropRegion> crop_region;

  /// Stable key used to look up stub fixtures for this image, e.g.
  /// "5092de_pre" or "5092de_pre_crop_8_8_16_16".
  std::string fixture_key;
};

struct ParsedFilename {
  std::string self_id;
  std::string link_id;
  std::string role_token;

  friend bool operator==(const ParsedFilename&, const ParsedFilename&) = default;
};

std::string format_filename(std::string_view self_id, std::string_view link_id,
                            const ImageRole& role);
/// Inverse of format_filename; nullopt when the name does not follow the
/// "{self}_{link}_{token}.png" grammar.
std::optional<ParsedFilename> parse_filename(std::string_view filename);

using ImagePayload = std::variant<RgbImage, LabelMask, ChangeMask>;

int payload_width(const ImagePayload& p);
int payload_height(const ImagePayload& p);
Bytes encode_payload(const ImagePayload& p);
std::string_view payload_kind(const ImagePayload& p);  // "rgb" | "label" | "change"
ImagePayload decode_payload(std::string_view kind, std::span<const std::uint8_t> png);

/// Per-session store of images keyed by self_id, in registration order.
class ImageRegistry {
 public:
  explicit ImageRegistry(std::shared_ptr<IdMinter> minter);

  const ImageRecord& register_image(std::span<const std::uint8_t> png, RoleKind role,
                                    std::optional<std::string> pair_id = std::nullopt);
  const ImageRecord& register_payload(ImagePayload payload, RoleKind role,
                                      std::optional<std::string> pair_id = std::nullopt);
  const ImageRecord& crop_and_register(const std::string& parent_id,
                                       const CropRegion& region);
  const ImageRecord& register_derived(const std::string& parent_id, std::string tag,
                                      ImagePayload payload);

  /// Lookup by self_id, filename ("x.png", "image/x.png", "x"), or by role
  /// alias ("pre", "cur", "crppre", "crpcur", a derived tag) which picks the
  /// most recently registered match.
  [[nodiscard]] const ImageRecord* find(std::string_view ref) const;
  [[nodiscard]] const ImageRecord& get(std::string_view ref) const;
  [[nodiscard]] const ImagePayload& payload(const std::string& self_id) const;

  /// Follows link_id to the Pre/Cur root.
  [[nodiscard]] const ImageRecord& root_of(const std::string& self_id) const;

  [[nodiscard]] const std::vector<std::string>& order() const { return order_; }
  [[nodiscard]] std::size_t size() const { return order_.size(); }
  [[nodiscard]] IdMinter& minter() { return *minter_; }

  /// Restores a record verbatim (session import).
  void restore(ImageRecord record, ImagePayload payload);

 private:
  struct Entry {
    ImageRecord record;
    ImagePayload payload;
  };
  const ImageRecord& insert(ImageRecord record, ImagePayload payload);

  std::shared_ptr<IdMinter> minter_;
  std::map<std::string, Entry, std::less<>> entries_;
  std::vector<std::string> order_;
};

}  // namespace changegpt
