#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace changegpt {

// Land-cover vocabulary of the semantic masks, in LoveDA palette order.
inline constexpr std::size_t kNumClasses = 7;
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "background", "water", "barren", "road", "building", "forest", "farmland"};

enum class LandClass : std::uint8_t {
  Background = 0,
  Water = 1,
  Barren = 2,
  Road = 3,
  Building = 4,
  Forest = 5,
  Farmland = 6,
};

std::string_view class_name(std::size_t index);

/// Resolves a class name or synonym ("water bodies", "buildings",
/// "agricultural") to its index. Case-insensitive.
std::optional<std::size_t> class_from_name(std::string_view name);

struct CropRegion {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  /// Throws OutOfBounds unless w, h > 0 and the region lies in the parent.
  void validate(int parent_width, int parent_height) const;

  friend bool operator==(const CropRegion&, const CropRegion&) = default;
};

class LabelMask {
 public:
  LabelMask() = default;
  LabelMask(int width, int height, std::vector<std::uint8_t> labels);
  static LabelMask filled(int width, int height, std::uint8_t label);

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] std::span<const std::uint8_t> labels() const noexcept {
    return labels_;
  }
  [[nodiscard]] std::uint8_t at(int x, int y) const {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }

  friend bool operator==(const LabelMask&, const LabelMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> labels_;
};

class ChangeMask {
 public:
  ChangeMask() = default;
  /// Any nonzero byte counts as changed; stored normalized to 0/1.
  ChangeMask(int width, int height, std::vector<std::uint8_t> changed);

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] std::size_t size() const noexcept { return changed_.size(); }
  [[nodiscard]] std::span<const std::uint8_t> changed() const noexcept {
    return changed_;
  }
  [[nodiscard]] bool at(int x, int y) const {
    return changed_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }

  friend bool operator==(const ChangeMask&, const ChangeMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> changed_;
};

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, std::vector<std::uint8_t> rgb);

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] std::span<const std::uint8_t> rgb() const noexcept {
    return rgb_;
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> rgb_;
};

struct Detection {
  std::string class_name;
  CropRegion box;
  double score = 0.0;
};

struct DetectionSet {
  std::vector<Detection> entries;

  /// Throws BadInput when a score leaves [0,1] or a box leaves the image.
  void validate(int width, int height) const;
};

struct SegScores {
  double overall_accuracy = 0.0;
  std::map<std::size_t, double> per_class_iou;
  std::map<std::size_t, double> per_class_f1;
  double mean_iou = 0.0;
  double mean_f1 = 0.0;
};

enum class DeltaKind { Relative, NewAppearance, FullDisappearance, Absent };

struct SizeDelta {
  std::uint64_t pre_count = 0;
  std::uint64_t cur_count = 0;
  DeltaKind kind = DeltaKind::Absent;
  /// Percent change; -100 for FullDisappearance, 0 for Absent, unset for
  /// NewAppearance.
  std::optional<double> pct_change;
};

using TransitionMatrix =
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses>;

inline constexpr double kDefaultMinScore = 0.5;

LabelMask crop(const LabelMask& mask, const CropRegion& region);
ChangeMask crop(const ChangeMask& mask, const CropRegion& region);
RgbImage crop(const RgbImage& image, const CropRegion& region);

std::uint64_t count_class_pixels(const LabelMask& mask, std::size_t cls);
std::uint64_t count_changed_pixels(const ChangeMask& mask);
double changed_fraction(const ChangeMask& mask);
bool whether_change(const ChangeMask& mask, double min_fraction = 0.0);

/// Per-pixel difference of two co-registered images: a pixel is changed when
/// any channel differs by more than `tolerance`.
ChangeMask difference_mask(const RgbImage& pre, const RgbImage& cur,
                           int tolerance = 0);

SizeDelta class_size_delta(const LabelMask& pre, const LabelMask& cur,
                           std::size_t cls);
TransitionMatrix class_transition_matrix(const LabelMask& pre,
                                         const LabelMask& cur);

/// Class with the largest pixel count; ties go to the lowest index.
std::size_t dominant_class(const LabelMask& mask);

std::size_t count_objects(const DetectionSet& detections,
                          std::optional<std::string_view> cls,
                          double min_score = kDefaultMinScore);
/// Number of 4-connected components of changed pixels.
std::size_t count_objects(const ChangeMask& mask);
/// Dispatching form; a class filter on a mask input is a BadFilter error.
std::size_t count_objects(const std::variant<DetectionSet, ChangeMask>& input,
                          std::optional<std::string_view> cls,
                          double min_score = kDefaultMinScore);

SegScores segmentation_metrics(const LabelMask& pred, const LabelMask& gt);

}  // namespace changegpt
