// Default toolkit: stubbed vision models and native calculators.

#include <fmt/format.h>

#include "changegpt/error.hpp"
#include "changegpt/text.hpp"
#include "changegpt/toolkit.hpp"

namespace changegpt {

namespace {

const ImageRecord& resolve(ToolContext& ctx, const std::string& ref) {
  const auto* rec = ctx.session.images().find(ref);
  if (rec == nullptr) {
    throw Error(ErrorCode::UnknownImage,
                "image '" + ref + "' does not exist; use a file name listed under IMAGES");
  }
  return *rec;
}

const ImagePayload& payload_of(ToolContext& ctx, const ImageRecord& rec) {
  return ctx.session.images().payload(rec.self_id);
}

bool is_crop(const ImageRecord& rec) {
  return rec.role.kind == RoleKind::CropPre || rec.role.kind == RoleKind::CropCur;
}

void require_photo(const ImageRecord& rec, std::string_view tool) {
  const auto k = rec.role.kind;
  if (k == RoleKind::Derived) {
    throw Error(ErrorCode::BadInput, std::string(tool) + " expects a pre/cur image or a crop, got " +
                                         rec.filename);
  }
}

LabelMask stub_label_mask(ToolContext& ctx, const ImageRecord& rec, std::string_view tool) {
  if (ctx.fixtures.locate(tool, rec.fixture_key, "png") || !is_crop(rec)) {
    return ctx.fixtures.label_mask(tool, rec.fixture_key);
  }
  const auto& parent = ctx.session.images().get(rec.link_id);
  return crop(ctx.fixtures.label_mask(tool, parent.fixture_key), *rec.crop_region);
}

DetectionSet stub_detections(ToolContext& ctx, const ImageRecord& rec) {
  for (auto tool : {kObjectCounting, kObjectDetection}) {
    if (ctx.fixtures.locate(tool, rec.fixture_key, "json")) {
      return ctx.fixtures.detections(tool, rec.fixture_key);
    }
  }
  if (!is_crop(rec)) return ctx.fixtures.detections(kObjectDetection, rec.fixture_key);

  // A crop sees the parent's detections whose box centre falls inside it,
  // clipped and shifted into crop coordinates.
  const auto& parent = ctx.session.images().get(rec.link_id);
  const auto all = ctx.fixtures.detections(kObjectDetection, parent.fixture_key);
  const auto& r = *rec.crop_region;
  DetectionSet out;
  for (const auto& d : all.entries) {
    const int cx = d.box.x + d.box.w / 2;
    const int cy = d.box.y + d.box.h / 2;
    if (cx < r.x || cy < r.y || cx >= r.x + r.w || cy >= r.y + r.h) continue;
    const int x0 = std::max(d.box.x, r.x);
    const int y0 = std::max(d.box.y, r.y);
    const int x1 = std::min(d.box.x + d.box.w, r.x + r.w);
    const int y1 = std::min(d.box.y + d.box.h, r.y + r.h);
    out.entries.push_back({d.class_name, CropRegion{x0 - r.x, y0 - r.y, x1 - x0, y1 - y0}, d.score});
  }
  return out;
}

std::string pct(std::uint64_t n, std::uint64_t total, int decimals) {
  const double p = total == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(total);
  return fmt::format("{:.{}f}", p, decimals);
}

// Root pair id and crop region identify which change map a record belongs to.
struct PairKey {
  std::string pair_id;
  std::optional<CropRegion> region;
  RoleKind root_role;
};

PairKey pair_key(ToolContext& ctx, const ImageRecord& rec) {
  const auto& root = ctx.session.images().root_of(rec.self_id);
  return {root.link_id, rec.crop_region, root.role.kind};
}

const ImageRecord& partner_of(ToolContext& ctx, const ImageRecord& rec) {
  const auto key = pair_key(ctx, rec);
  const auto& reg = ctx.session.images();
  for (auto it = reg.order().rbegin(); it != reg.order().rend(); ++it) {
    const auto& other = reg.get(*it);
    if (other.self_id == rec.self_id || other.role.kind == RoleKind::Derived) continue;
    if (is_crop(other) != is_crop(rec)) continue;
    const auto k = pair_key(ctx, other);
    if (k.pair_id == key.pair_id && k.region == key.region && k.root_role != key.root_role) {
      return other;
    }
  }
  throw Error(ErrorCode::BadInput, "no counterpart image found for " + rec.filename);
}

// Returns (pre, cur) for a pair given as pre=/cur= or as a single image=.
std::pair<const ImageRecord*, const ImageRecord*> resolve_pair(ToolContext& ctx,
                                                               const ToolArgs& args) {
  const ImageRecord* a = nullptr;
  const ImageRecord* b = nullptr;
  if (args.get("pre") || args.get("cur")) {
    a = &resolve(ctx, args.require("pre"));
    b = &resolve(ctx, args.require("cur"));
  } else {
    a = &resolve(ctx, args.require("image"));
    require_photo(*a, "pair");
    b = &partner_of(ctx, *a);
  }
  require_photo(*a, "pair");
  require_photo(*b, "pair");
  auto ka = pair_key(ctx, *a);
  auto kb = pair_key(ctx, *b);
  if (ka.root_role == RoleKind::Cur) {
    std::swap(a, b);
    std::swap(ka, kb);
  }
  if (ka.pair_id != kb.pair_id || ka.root_role != RoleKind::Pre || kb.root_role != RoleKind::Cur ||
      ka.region != kb.region) {
    throw Error(ErrorCode::BadInput,
                a->filename + " and " + b->filename + " are not a matching previous/current pair");
  }
  return {a, b};
}

ToolOutput binary_change_detection(ToolContext& ctx, const ToolArgs& args) {
  auto [pre, cur] = resolve_pair(ctx, args);
  const auto key = pair_key(ctx, *pre);
  ChangeMask mask = ctx.fixtures.change_mask(kBinaryChangeDetection, key.pair_id);
  if (key.region) mask = crop(mask, *key.region);
  if (mask.width() != pre->width || mask.height() != pre->height) {
    throw Error(ErrorCode::DimensionMismatch, "change map fixture does not match " + pre->filename);
  }
  const auto& rec = ctx.session.register_derived(pre->self_id, "change", std::move(mask));
  return {fmt::format("The binary change map between {} and {} is saved as {}.\nimage: {}",
                      pre->filename, cur->filename, rec.filename, rec.filename),
          {rec.self_id}};
}

ToolOutput image_captioning(ToolContext& ctx, const ToolArgs& args) {
  const auto& rec = resolve(ctx, args.require("image"));
  require_photo(rec, kImageCaptioning);
  const auto caption = ctx.fixtures.text(kImageCaptioning, rec.fixture_key);
  return {fmt::format("Caption of {}: {}\ncaption: {}", rec.filename, caption, caption), {}};
}

ToolOutput scene_classification(ToolContext& ctx, const ToolArgs& args) {
  const auto& rec = resolve(ctx, args.require("image"));
  require_photo(rec, kSceneClassification);
  const auto scene = ctx.fixtures.text(kSceneClassification, rec.fixture_key);
  return {fmt::format("The scene of {} is classified as {}.\nscene: {}", rec.filename, scene, scene),
          {}};
}

ToolOutput semantic_segmentation(ToolContext& ctx, const ToolArgs& args) {
  const auto& rec = resolve(ctx, args.require("image"));
  require_photo(rec, kSemanticSegmentation);
  auto mask = stub_label_mask(ctx, rec, kSemanticSegmentation);
  if (mask.width() != rec.width || mask.height() != rec.height) {
    throw Error(ErrorCode::DimensionMismatch, "segmentation fixture does not match " + rec.filename);
  }
  const auto& out = ctx.session.register_derived(rec.self_id, "landuse", std::move(mask));
  return {fmt::format("The land-use segmentation of {} is saved as {}.\nimage: {}", rec.filename,
                      out.filename, out.filename),
          {out.self_id}};
}

ToolOutput object_detection(ToolContext& ctx, const ToolArgs& args) {
  const auto& rec = resolve(ctx, args.require("image"));
  require_photo(rec, kObjectDetection);
  const auto set = stub_detections(ctx, rec);
  set.validate(rec.width, rec.height);
  const auto cls = args.get("class");
  std::string lines;
  std::size_t n = 0;
  const double min_score = ctx.config.min_score;
  for (const auto& d : set.entries) {
    if (d.score < min_score) continue;
    if (cls && count_objects(DetectionSet{{d}}, *cls, min_score) == 0) continue;
    ++n;
    lines += fmt::format("- {} ({:.2f}) at [{}, {}, {}, {}]\n", d.class_name, d.score, d.box.x,
                         d.box.y, d.box.w, d.box.h);
  }
  return {fmt::format("Detected {} object(s){} in {}:\n{}detections: {}", n,
                      cls ? " of class " + *cls : std::string{}, rec.filename, lines, n),
          {}};
}

ToolOutput object_counting(ToolContext& ctx, const ToolArgs& args) {
  const auto& rec = resolve(ctx, args.require("image"));
  const auto cls = args.get("class");
  const auto& payload = payload_of(ctx, rec);
  if (std::holds_alternative<ChangeMask>(payload)) {
    const auto n = count_objects(std::variant<DetectionSet, ChangeMask>{std::get<ChangeMask>(payload)},
                                 cls ? std::optional<std::string_view>(*cls) : std::nullopt);
    return {fmt::format("There are {} separate changed regions in {}.\ncount: {}", n, rec.filename, n),
            {}};
  }
  require_photo(rec, kObjectCounting);
  const auto set = stub_detections(ctx, rec);
  set.validate(rec.width, rec.height);
  const auto n = count_objects(set, cls ? std::optional<std::string_view>(*cls) : std::nullopt,
                               ctx.config.min_score);
  const std::string what = cls ? *cls : std::string("object");
  return {fmt::format("There are {} {}(s) in {}.\nclass: {}\ncount: {}", n, what, rec.filename, what, n),
          {}};
}

ToolOutput pixel_counting(ToolContext& ctx, const ToolArgs& args) {
  const auto& rec = resolve(ctx, args.require("image"));
  const auto& payload = payload_of(ctx, rec);
  const auto cls_arg = args.get("class");
  if (const auto* change = std::get_if<ChangeMask>(&payload)) {
    if (cls_arg && !iequals(*cls_arg, "changed") && !iequals(*cls_arg, "change")) {
      throw Error(ErrorCode::BadInput, "a change map only has the 'changed' class");
    }
    const auto n = count_changed_pixels(*change);
    const auto total = static_cast<std::uint64_t>(change->size());
    return {fmt::format("changed pixels: {} ({}%)\nchanged_pixels: {}\ntotal_pixels: {}\npercent: {}", n,
                        pct(n, total, 1), n, total, pct(n, total, 4)),
            {}};
  }
  const auto* labels = std::get_if<LabelMask>(&payload);
  if (labels == nullptr) {
    throw Error(ErrorCode::BadInput, "pixel_counting needs a segmentation or change map, not " +
                                         rec.filename);
  }
  const auto total = static_cast<std::uint64_t>(labels->size());
  if (cls_arg) {
    const auto cls = class_from_name(*cls_arg);
    if (!cls) {
      throw Error(ErrorCode::BadInput, "unknown land-use class '" + *cls_arg + "'");
    }
    const auto n = count_class_pixels(*labels, *cls);
    const auto name = class_name(*cls);
    return {fmt::format("{} pixels: {} ({}%)\nclass: {}\npixels: {}\ntotal_pixels: {}\npercent: {}", name,
                        n, pct(n, total, 1), name, n, total, pct(n, total, 4)),
            {}};
  }
  std::string out;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto n = count_class_pixels(*labels, c);
    if (n == 0) continue;
    out += fmt::format("{} pixels: {} ({}%)\n", class_name(c), n, pct(n, total, 1));
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto n = count_class_pixels(*labels, c);
    out += fmt::format("{}_pixels: {}\n", class_name(c), n);
  }
  out += fmt::format("total_pixels: {}", total);
  return {out, {}};
}

ToolOutput whether_change_tool(ToolContext& ctx, const ToolArgs& args) {
  double min_fraction = ctx.config.whether_min_fraction;
  if (auto v = args.get("min_fraction")) {
    try {
      min_fraction = std::stod(*v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadInput, "min_fraction must be a number");
    }
    if (min_fraction < 0.0 || min_fraction > 1.0) {
      throw Error(ErrorCode::BadInput, "min_fraction must lie in [0,1]");
    }
  }
  ChangeMask mask;
  std::string subject;
  const ImageRecord* single = nullptr;
  if (auto img = args.get("image")) single = &resolve(ctx, *img);
  if (single != nullptr && std::holds_alternative<ChangeMask>(payload_of(ctx, *single))) {
    mask = std::get<ChangeMask>(payload_of(ctx, *single));
    subject = single->filename;
  } else {
    auto [pre, cur] = resolve_pair(ctx, args);
    const auto* a = std::get_if<RgbImage>(&payload_of(ctx, *pre));
    const auto* b = std::get_if<RgbImage>(&payload_of(ctx, *cur));
    if (a == nullptr || b == nullptr) {
      throw Error(ErrorCode::BadInput, "whether_change compares two photographs or reads a change map");
    }
    mask = difference_mask(*a, *b, ctx.config.pixel_tolerance);
    subject = pre->filename + " and " + cur->filename;
  }
  const bool changed = whether_change(mask, min_fraction);
  return {fmt::format("{}\nchanged: {}\nchanged_fraction: {:.6f}",
                      changed ? "There is a discernible change between " + subject + "."
                              : "There is no discernible change between " + subject + ".",
                      changed ? "yes" : "no", changed_fraction(mask)),
          {}};
}

}  // namespace

ToolRegistry make_default_registry(ToolkitConfig config) {
  ToolRegistry reg(config);
  auto backing = [&](std::string_view name, BackingKind fallback) {
    if (auto it = config.remote_endpoints.find(std::string(name)); it != config.remote_endpoints.end()) {
      return Backing{BackingKind::Remote, it->second};
    }
    return Backing{fallback, {}};
  };
  auto add = [&](std::string_view name, std::string description, std::string grammar,
                 BackingKind kind, ToolHandler native) {
    auto b = backing(name, kind);
    ToolHandler handler = b.kind == BackingKind::Remote
                              ? make_remote_handler(std::string(name), b.endpoint, config.remote_timeout_s)
                              : std::move(native);
    reg.register_tool({std::string(name), std::move(description), std::move(grammar), b},
                      std::move(handler));
  };

  add(kBinaryChangeDetection,
      "useful when you want to know where the changes are between a previous image and a current "
      "image. It produces a binary change map image. The input to this tool should be "
      "\"pre=<previous image file>, cur=<current image file>\"",
      "pre=<image>, cur=<image>", BackingKind::Stub, binary_change_detection);
  add(kImageCaptioning,
      "useful when you want to know what is inside a remote sensing image. It returns a short "
      "description of the image. The input to this tool should be \"image=<image file>\"",
      "image=<image>", BackingKind::Stub, image_captioning);
  add(kSceneClassification,
      "useful when you want to know the scene or land-cover class of a whole image or a cropped "
      "area. The input to this tool should be \"image=<image file>\"",
      "image=<image>", BackingKind::Stub, scene_classification);
  add(kSemanticSegmentation,
      "useful when you want to know the land-use classes (background, water, barren, road, "
      "building, forest, farmland) of every pixel. It produces a land-use map image whose name "
      "ends with _landuse.png. The input to this tool should be \"image=<image file>\"",
      "image=<image>", BackingKind::Stub, semantic_segmentation);
  add(kObjectDetection,
      "useful when you want to locate objects such as ships, planes, vehicles, storage tanks or "
      "harbors in an image. It lists every detected box. The input to this tool should be "
      "\"image=<image file>, class=<object class>\" where class is optional",
      "image=<image>[, class=<object>]", BackingKind::Stub, object_detection);
  add(kObjectCounting,
      "useful when you want to count objects of one class (ships, planes, storage tanks, harbors, "
      "...) in an image, or count separate changed regions in a change map. The input to this "
      "tool should be \"image=<image file>, class=<object class>\"",
      "image=<image>[, class=<object>]", BackingKind::Stub, object_counting);
  add(kPixelCounting,
      "useful when you want to count pixels of a land-use class in a land-use map, or changed "
      "pixels in a change map, together with their percentage of the image. The input to this "
      "tool should be \"image=<map file>, class=<land-use class>\" where class is optional",
      "image=<map>[, class=<land-use class>]", BackingKind::Native, pixel_counting);
  add(kWhetherChange,
      "useful when you want to know whether there is any change between a previous image and a "
      "current image. The input to this tool should be \"pre=<previous image file>, "
      "cur=<current image file>\" or \"image=<change map file>\"",
      "pre=<image>, cur=<image> | image=<change map>[, min_fraction=<0..1>]", BackingKind::Native,
      whether_change_tool);
  return reg;
}

}  // namespace changegpt
