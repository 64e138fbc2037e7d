#include "changegpt/raster.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "changegpt/error.hpp"
#include "changegpt/text.hpp"

namespace changegpt {

namespace {

void require_same_size(int w1, int h1, int w2, int h2) {
  if (w1 != w2 || h1 != h2) {
    throw Error(ErrorCode::DimensionMismatch,
                "dimension mismatch: " + std::to_string(w1) + "x" +
                    std::to_string(h1) + " vs " + std::to_string(w2) + "x" +
                    std::to_string(h2));
  }
}

void require_class(std::size_t cls) {
  if (cls >= kNumClasses) {
    throw Error(ErrorCode::BadClass,
                "class index " + std::to_string(cls) + " out of range");
  }
}

void require_dims(int width, int height, std::size_t n, std::size_t stride) {
  if (width < 0 || height < 0 ||
      n != static_cast<std::size_t>(width) * height * stride) {
    throw Error(ErrorCode::DimensionMismatch,
                "buffer length does not match " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
}

template <typename T>
std::vector<T> crop_buffer(std::span<const T> src, int width, int height,
                           const CropRegion& region, int stride) {
  region.validate(width, height);
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(region.w) * region.h * stride);
  for (int j = 0; j < region.h; ++j) {
    auto row = src.begin() +
               (static_cast<std::ptrdiff_t>(region.y + j) * width + region.x) *
                   stride;
    out.insert(out.end(), row, row + static_cast<std::ptrdiff_t>(region.w) * stride);
  }
  return out;
}

// Lowercase, separators folded to spaces, trailing plural 's' dropped.
std::string normalize_object_class(std::string_view name) {
  std::string out;
  for (char c : trim(name)) {
    if (c == '-' || c == '_') {
      out.push_back(' ');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (out.size() > 3 && out.ends_with("es") &&
      (out.ends_with("ches") || out.ends_with("shes") || out.ends_with("xes"))) {
    out.resize(out.size() - 2);
  } else if (out.size() > 1 && out.back() == 's' && !out.ends_with("ss")) {
    out.pop_back();
  }
  return out;
}

}  // namespace

std::string_view class_name(std::size_t index) {
  require_class(index);
  return kClassNames[index];
}

std::optional<std::size_t> class_from_name(std::string_view name) {
  static const std::map<std::string, std::size_t, std::less<>> kSynonyms = {
      {"background", 0},       {"water", 1},         {"water body", 1},
      {"water bodies", 1},     {"waterbody", 1},     {"river", 1},
      {"lake", 1},             {"barren", 2},        {"barren land", 2},
      {"bare land", 2},        {"bare soil", 2},     {"road", 3},
      {"roads", 3},            {"building", 4},      {"buildings", 4},
      {"built-up", 4},         {"forest", 5},        {"forests", 5},
      {"tree", 5},             {"trees", 5},         {"farmland", 6},
      {"farmlands", 6},        {"agricultural", 6},  {"agriculture", 6},
      {"cropland", 6},
  };
  const std::string key = to_lower(trim(name));
  if (auto it = kSynonyms.find(key); it != kSynonyms.end()) return it->second;
  if (key.size() == 1 && key[0] >= '0' && key[0] < '0' + static_cast<int>(kNumClasses)) {
    return static_cast<std::size_t>(key[0] - '0');
  }
  return std::nullopt;
}

void CropRegion::validate(int parent_width, int parent_height) const {
  const bool ok = w > 0 && h > 0 && x >= 0 && y >= 0 &&
                  static_cast<long long>(x) + w <= parent_width &&
                  static_cast<long long>(y) + h <= parent_height;
  if (!ok) {
    throw Error(ErrorCode::OutOfBounds,
                "crop region (" + std::to_string(x) + "," + std::to_string(y) +
                    "," + std::to_string(w) + "," + std::to_string(h) +
                    ") exceeds " + std::to_string(parent_width) + "x" +
                    std::to_string(parent_height));
  }
}

LabelMask::LabelMask(int width, int height, std::vector<std::uint8_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
  require_dims(width, height, labels_.size(), 1);
  for (auto v : labels_) {
    if (v >= kNumClasses) {
      throw Error(ErrorCode::BadClass,
                  "label value " + std::to_string(v) + " out of range");
    }
  }
}

LabelMask LabelMask::filled(int width, int height, std::uint8_t label) {
  return {width, height,
          std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, label)};
}

ChangeMask::ChangeMask(int width, int height, std::vector<std::uint8_t> changed)
    : width_(width), height_(height), changed_(std::move(changed)) {
  require_dims(width, height, changed_.size(), 1);
  for (auto& v : changed_) v = v != 0 ? 1 : 0;
}

RgbImage::RgbImage(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), rgb_(std::move(rgb)) {
  require_dims(width, height, rgb_.size(), 3);
}

void DetectionSet::validate(int width, int height) const {
  for (const auto& d : entries) {
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw Error(ErrorCode::BadInput, "detection score outside [0,1]");
    }
    try {
      d.box.validate(width, height);
    } catch (const Error& e) {
      throw Error(ErrorCode::BadInput, std::string("detection box: ") + e.what());
    }
  }
}

LabelMask crop(const LabelMask& mask, const CropRegion& region) {
  return {region.w, region.h,
          crop_buffer(mask.labels(), mask.width(), mask.height(), region, 1)};
}

ChangeMask crop(const ChangeMask& mask, const CropRegion& region) {
  return {region.w, region.h,
          crop_buffer(mask.changed(), mask.width(), mask.height(), region, 1)};
}

RgbImage crop(const RgbImage& image, const CropRegion& region) {
  return {region.w, region.h,
          crop_buffer(image.rgb(), image.width(), image.height(), region, 3)};
}

std::uint64_t count_class_pixels(const LabelMask& mask, std::size_t cls) {
  require_class(cls);
  const auto labels = mask.labels();
  return static_cast<std::uint64_t>(
      std::count(labels.begin(), labels.end(), static_cast<std::uint8_t>(cls)));
}

std::uint64_t count_changed_pixels(const ChangeMask& mask) {
  const auto bits = mask.changed();
  return static_cast<std::uint64_t>(std::count(bits.begin(), bits.end(), 1));
}

double changed_fraction(const ChangeMask& mask) {
  if (mask.size() == 0) return 0.0;
  return static_cast<double>(count_changed_pixels(mask)) /
         static_cast<double>(mask.size());
}

bool whether_change(const ChangeMask& mask, double min_fraction) {
  return changed_fraction(mask) > min_fraction;
}

ChangeMask difference_mask(const RgbImage& pre, const RgbImage& cur,
                           int tolerance) {
  require_same_size(pre.width(), pre.height(), cur.width(), cur.height());
  const auto a = pre.rgb();
  const auto b = cur.rgb();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(pre.width()) * pre.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
      if (std::abs(int{a[3 * i + ch]} - int{b[3 * i + ch]}) > tolerance) {
        out[i] = 1;
        break;
      }
    }
  }
  return {pre.width(), pre.height(), std::move(out)};
}

SizeDelta class_size_delta(const LabelMask& pre, const LabelMask& cur,
                           std::size_t cls) {
  require_same_size(pre.width(), pre.height(), cur.width(), cur.height());
  SizeDelta d;
  d.pre_count = count_class_pixels(pre, cls);
  d.cur_count = count_class_pixels(cur, cls);
  if (d.pre_count > 0 && d.cur_count == 0) {
    d.kind = DeltaKind::FullDisappearance;
    d.pct_change = -100.0;
  } else if (d.pre_count > 0) {
    d.kind = DeltaKind::Relative;
    d.pct_change = (static_cast<double>(d.cur_count) -
                    static_cast<double>(d.pre_count)) /
                   static_cast<double>(d.pre_count) * 100.0;
  } else if (d.cur_count > 0) {
    d.kind = DeltaKind::NewAppearance;
  } else {
    d.kind = DeltaKind::Absent;
    d.pct_change = 0.0;
  }
  return d;
}

TransitionMatrix class_transition_matrix(const LabelMask& pre,
                                         const LabelMask& cur) {
  require_same_size(pre.width(), pre.height(), cur.width(), cur.height());
  TransitionMatrix m{};
  const auto a = pre.labels();
  const auto b = cur.labels();
  for (std::size_t i = 0; i < a.size(); ++i) ++m[a[i]][b[i]];
  return m;
}

std::size_t dominant_class(const LabelMask& mask) {
  std::array<std::uint64_t, kNumClasses> counts{};
  for (auto v : mask.labels()) ++counts[v];
  // max_element returns the first maximum, so ties resolve to the lowest index.
  return static_cast<std::size_t>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::size_t count_objects(const DetectionSet& detections,
                          std::optional<std::string_view> cls,
                          double min_score) {
  const std::string wanted = cls ? normalize_object_class(*cls) : std::string{};
  return static_cast<std::size_t>(std::count_if(
      detections.entries.begin(), detections.entries.end(),
      [&](const Detection& d) {
        if (d.score < min_score) return false;
        return !cls || normalize_object_class(d.class_name) == wanted;
      }));
}

std::size_t count_objects(const ChangeMask& mask) {
  // Two-pass labeling with a union-find over provisional labels.
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint32_t> label(mask.size(), 0);
  std::vector<std::uint32_t> parent{0};

  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const std::uint32_t left = x > 0 ? label[i - 1] : 0;
      const std::uint32_t up = y > 0 ? label[i - w] : 0;
      if (left == 0 && up == 0) {
        const auto next = static_cast<std::uint32_t>(parent.size());
        parent.push_back(next);
        label[i] = next;
      } else if (left != 0 && up != 0) {
        const auto a = find(left);
        const auto b = find(up);
        label[i] = std::min(a, b);
        parent[std::max(a, b)] = std::min(a, b);
      } else {
        label[i] = left != 0 ? left : up;
      }
    }
  }
  std::size_t roots = 0;
  for (std::uint32_t l = 1; l < parent.size(); ++l) {
    if (find(l) == l) ++roots;
  }
  return roots;
}

std::size_t count_objects(const std::variant<DetectionSet, ChangeMask>& input,
                          std::optional<std::string_view> cls,
                          double min_score) {
  if (const auto* mask = std::get_if<ChangeMask>(&input)) {
    if (cls) {
      throw Error(ErrorCode::BadFilter,
                  "class filter is not applicable to a change mask");
    }
    return count_objects(*mask);
  }
  return count_objects(std::get<DetectionSet>(input), cls, min_score);
}

SegScores segmentation_metrics(const LabelMask& pred, const LabelMask& gt) {
  require_same_size(pred.width(), pred.height(), gt.width(), gt.height());
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> confusion{};
  const auto p = pred.labels();
  const auto g = gt.labels();
  for (std::size_t i = 0; i < p.size(); ++i) ++confusion[g[i]][p[i]];

  SegScores s;
  std::uint64_t correct = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) correct += confusion[c][c];
  s.overall_accuracy =
      p.empty() ? 1.0 : static_cast<double>(correct) / static_cast<double>(p.size());

  double iou_sum = 0.0;
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::uint64_t tp = confusion[c][c];
    std::uint64_t fn = 0;
    std::uint64_t fp = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      if (k == c) continue;
      fn += confusion[c][k];
      fp += confusion[k][c];
    }
    // Classes absent from both prediction and ground truth are not scored.
    if (tp + fp + fn == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    const double f1 =
        2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    s.per_class_iou[c] = iou;
    s.per_class_f1[c] = f1;
    iou_sum += iou;
    f1_sum += f1;
  }
  if (!s.per_class_iou.empty()) {
    s.mean_iou = iou_sum / static_cast<double>(s.per_class_iou.size());
    s.mean_f1 = f1_sum / static_cast<double>(s.per_class_f1.size());
  } else {
    s.mean_iou = 1.0;
    s.mean_f1 = 1.0;
  }
  return s;
}

}  // namespace changegpt
