#include "changegpt/images.hpp"

#include <cstdio>

#include "changegpt/error.hpp"
#include "changegpt/text.hpp"

namespace changegpt {

std::string IdMinter::mint() {
  std::lock_guard lock(mutex_);
  while (true) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%06llx",
                  static_cast<unsigned long long>(rng_() & 0xffffffULL));
    std::string id(buf);
    if (issued_.insert(id).second) return id;
  }
}

void IdMinter::reserve(const std::string& id) {
  std::lock_guard lock(mutex_);
  issued_.insert(id);
}

bool IdMinter::issued(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return issued_.contains(id);
}

bool is_hex_id(std::string_view s) {
  if (s.size() != 6) return false;
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

std::string ImageRole::token() const {
  switch (kind) {
    case RoleKind::Pre: return "pre";
    case RoleKind::Cur: return "cur";
    case RoleKind::CropPre: return "crppre";
    case RoleKind::CropCur: return "crpcur";
    case RoleKind::Derived: return tag;
  }
  return tag;
}

ImageRole ImageRole::from_token(std::string_view token) {
  if (token == "pre") return {RoleKind::Pre, {}};
  if (token == "cur") return {RoleKind::Cur, {}};
  if (token == "crppre") return {RoleKind::CropPre, {}};
  if (token == "crpcur") return {RoleKind::CropCur, {}};
  return {RoleKind::Derived, std::string(token)};
}

namespace {

bool valid_tag(std::string_view tag) {
  if (tag.empty()) return false;
  for (char c : tag) {
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))) return false;
  }
  return tag != "pre" && tag != "cur" && tag != "crppre" && tag != "crpcur";
}

}  // namespace

std::string format_filename(std::string_view self_id, std::string_view link_id,
                            const ImageRole& role) {
  std::string out;
  out.append(self_id).append("_").append(link_id).append("_").append(role.token()).append(".png");
  return out;
}

std::optional<ParsedFilename> parse_filename(std::string_view filename) {
  if (const auto slash = filename.rfind('/'); slash != std::string_view::npos) {
    filename = filename.substr(slash + 1);
  }
  if (!filename.ends_with(".png")) return std::nullopt;
  filename.remove_suffix(4);
  const auto parts = split(filename, '_');
  if (parts.size() != 3 || !is_hex_id(parts[0]) || !is_hex_id(parts[1])) {
    return std::nullopt;
  }
  const auto role = ImageRole::from_token(parts[2]);
  if (role.kind == RoleKind::Derived && !valid_tag(role.tag)) return std::nullopt;
  return ParsedFilename{std::string(parts[0]), std::string(parts[1]), std::string(parts[2])};
}

int payload_width(const ImagePayload& p) {
  return std::visit([](const auto& v) { return v.width(); }, p);
}

int payload_height(const ImagePayload& p) {
  return std::visit([](const auto& v) { return v.height(); }, p);
}

Bytes encode_payload(const ImagePayload& p) {
  if (const auto* rgb = std::get_if<RgbImage>(&p)) return encode_rgb(*rgb);
  if (const auto* lm = std::get_if<LabelMask>(&p)) return encode_label_mask(*lm);
  return encode_change_mask(std::get<ChangeMask>(p));
}

std::string_view payload_kind(const ImagePayload& p) {
  if (std::holds_alternative<RgbImage>(p)) return "rgb";
  if (std::holds_alternative<LabelMask>(p)) return "label";
  return "change";
}

ImagePayload decode_payload(std::string_view kind, std::span<const std::uint8_t> png) {
  if (kind == "rgb") return decode_rgb(png);
  if (kind == "label") return decode_label_mask(png);
  if (kind == "change") return decode_change_mask(png);
  throw Error(ErrorCode::BadInput, "unknown payload kind '" + std::string(kind) + "'");
}

ImageRegistry::ImageRegistry(std::shared_ptr<IdMinter> minter)
    : minter_(minter ? std::move(minter) : std::make_shared<IdMinter>()) {}

const ImageRecord& ImageRegistry::register_image(std::span<const std::uint8_t> png,
                                                 RoleKind role,
                                                 std::optional<std::string> pair_id) {
  return register_payload(decode_rgb(png), role, std::move(pair_id));
}

const ImageRecord& ImageRegistry::register_payload(ImagePayload payload, RoleKind role,
                                                   std::optional<std::string> pair_id) {
  if (role != RoleKind::Pre && role != RoleKind::Cur) {
    throw Error(ErrorCode::BadInput, "only pre/cur images can be uploaded");
  }
  if (pair_id) {
    if (!is_hex_id(*pair_id)) {
      throw Error(ErrorCode::BadInput, "pair id must be 6 lowercase hex chars");
    }
    minter_->reserve(*pair_id);
  } else {
    // Pair with the latest unmatched counterpart, otherwise open a new pair.
    const RoleKind other = role == RoleKind::Pre ? RoleKind::Cur : RoleKind::Pre;
    for (auto it = order_.rbegin(); it != order_.rend() && !pair_id; ++it) {
      const auto& rec = entries_.at(*it).record;
      if (rec.role.kind == role) break;
      if (rec.role.kind == other) pair_id = rec.link_id;
    }
    if (!pair_id) pair_id = minter_->mint();
  }
  const int width = payload_width(payload);
  const int height = payload_height(payload);
  for (const auto& id : order_) {
    const auto& rec = entries_.at(id).record;
    if (rec.link_id != *pair_id) continue;
    if (rec.role.kind != RoleKind::Pre && rec.role.kind != RoleKind::Cur) continue;
    if (rec.width != width || rec.height != height) {
      throw Error(ErrorCode::DimensionMismatch,
                  "image is " + std::to_string(width) + "x" + std::to_string(height) +
                      " but its pair partner " + rec.filename + " is " +
                      std::to_string(rec.width) + "x" + std::to_string(rec.height));
    }
  }
  ImageRecord rec;
  rec.self_id = minter_->mint();
  rec.link_id = *pair_id;
  rec.role = {role, {}};
  rec.filename = format_filename(rec.self_id, rec.link_id, rec.role);
  rec.width = width;
  rec.height = height;
  rec.fixture_key = rec.link_id + "_" + rec.role.token();
  return insert(std::move(rec), std::move(payload));
}

const ImageRecord& ImageRegistry::crop_and_register(const std::string& parent_id,
                                                    const CropRegion& region) {
  const ImageRecord* parent = find(parent_id);
  if (parent == nullptr) {
    throw Error(ErrorCode::UnknownParent, "no image '" + parent_id + "' to crop");
  }
  if (parent->role.kind != RoleKind::Pre && parent->role.kind != RoleKind::Cur) {
    throw Error(ErrorCode::UnknownParent,
                "crop parent must be a pre or cur image, got " + parent->filename);
  }
  region.validate(parent->width, parent->height);
  const auto& parent_payload = entries_.at(parent->self_id).payload;
  ImagePayload cropped =
      std::visit([&](const auto& v) -> ImagePayload { return crop(v, region); }, parent_payload);

  ImageRecord rec;
  rec.self_id = minter_->mint();
  rec.link_id = parent->self_id;
  rec.role = {parent->role.kind == RoleKind::Pre ? RoleKind::CropPre : RoleKind::CropCur, {}};
  rec.filename = format_filename(rec.self_id, rec.link_id, rec.role);
  rec.width = region.w;
  rec.height = region.h;
  rec.crop_region = region;
  rec.fixture_key = parent->fixture_key + "_crop_" + std::to_string(region.x) + "_" +
                    std::to_string(region.y) + "_" + std::to_string(region.w) + "_" +
                    std::to_string(region.h);
  return insert(std::move(rec), std::move(cropped));
}

const ImageRecord& ImageRegistry::register_derived(const std::string& parent_id,
                                                   std::string tag, ImagePayload payload) {
  const ImageRecord* parent = find(parent_id);
  if (parent == nullptr) {
    throw Error(ErrorCode::UnknownParent, "no parent image '" + parent_id + "'");
  }
  if (!valid_tag(tag)) {
    throw Error(ErrorCode::BadInput, "invalid derived tag '" + tag + "'");
  }
  ImageRecord rec;
  rec.self_id = minter_->mint();
  rec.link_id = parent->self_id;
  rec.role = {RoleKind::Derived, std::move(tag)};
  rec.filename = format_filename(rec.self_id, rec.link_id, rec.role);
  rec.width = payload_width(payload);
  rec.height = payload_height(payload);
  rec.crop_region = parent->crop_region;
  rec.fixture_key = parent->fixture_key + "_" + rec.role.tag;
  return insert(std::move(rec), std::move(payload));
}

const ImageRecord& ImageRegistry::insert(ImageRecord record, ImagePayload payload) {
  const std::string id = record.self_id;
  auto [it, inserted] = entries_.emplace(id, Entry{std::move(record), std::move(payload)});
  if (!inserted) {
    throw Error(ErrorCode::BadInput, "image id '" + id + "' already registered");
  }
  order_.push_back(id);
  return it->second.record;
}

void ImageRegistry::restore(ImageRecord record, ImagePayload payload) {
  minter_->reserve(record.self_id);
  minter_->reserve(record.link_id);
  insert(std::move(record), std::move(payload));
}

const ImageRecord* ImageRegistry::find(std::string_view ref) const {
  ref = trim(ref);
  if (ref.size() >= 2 && (ref.front() == '"' || ref.front() == '\'') && ref.back() == ref.front()) {
    ref = ref.substr(1, ref.size() - 2);
  }
  if (const auto slash = ref.rfind('/'); slash != std::string_view::npos) {
    ref = ref.substr(slash + 1);
  }
  if (ref.ends_with(".png")) ref.remove_suffix(4);
  if (auto it = entries_.find(ref); it != entries_.end()) return &it->second.record;
  if (ref.size() > 6 && ref[6] == '_') {
    if (auto it = entries_.find(ref.substr(0, 6)); it != entries_.end()) {
      const auto& rec = it->second.record;
      if (std::string_view(rec.filename).substr(0, rec.filename.size() - 4) == ref) return &rec;
    }
  }
  const std::string alias = to_lower(ref);
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    const auto& rec = entries_.at(*it).record;
    if (rec.role.token() == alias) return &rec;
  }
  return nullptr;
}

const ImageRecord& ImageRegistry::get(std::string_view ref) const {
  const auto* rec = find(ref);
  if (rec == nullptr) {
    throw Error(ErrorCode::UnknownImage, "no image named '" + std::string(ref) + "'");
  }
  return *rec;
}

const ImagePayload& ImageRegistry::payload(const std::string& self_id) const {
  auto it = entries_.find(self_id);
  if (it == entries_.end()) {
    throw Error(ErrorCode::UnknownImage, "no image '" + self_id + "'");
  }
  return it->second.payload;
}

const ImageRecord& ImageRegistry::root_of(const std::string& self_id) const {
  const ImageRecord* rec = &get(self_id);
  for (std::size_t hops = 0; hops <= order_.size(); ++hops) {
    if (rec->role.kind == RoleKind::Pre || rec->role.kind == RoleKind::Cur) return *rec;
    rec = &get(rec->link_id);
  }
  throw Error(ErrorCode::UnknownParent, "lineage cycle at " + self_id);
}

}  // namespace changegpt
