// Generates the bundled fixture set: synthetic image pairs, stub-tool
// artifacts, a 20-question dataset and replay scripts for a correct agent.
//
// usage: make_fixtures <output dir>

#include <cmath>
#include <iostream>
#include <map>

#include <fmt/format.h>
#include <json.hpp>

#include "changegpt/agent.hpp"
#include "changegpt/error.hpp"
#include "changegpt/png_io.hpp"
#include "changegpt/toolkit.hpp"

using namespace changegpt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kSize = 64;

struct Canvas {
  std::vector<std::uint8_t> px = std::vector<std::uint8_t>(kSize * kSize, 0);

  Canvas& fill(LandClass c) {
    std::fill(px.begin(), px.end(), static_cast<std::uint8_t>(c));
    return *this;
  }
  Canvas& rect(int x, int y, int w, int h, LandClass c) {
    for (int j = y; j < y + h; ++j) {
      for (int i = x; i < x + w; ++i) px[static_cast<std::size_t>(j) * kSize + i] = static_cast<std::uint8_t>(c);
    }
    return *this;
  }
  [[nodiscard]] LabelMask mask() const { return {kSize, kSize, px}; }
};

// Palette colour plus a fixed per-position texture, identical in both dates,
// so photographs differ exactly where the land cover does.
RgbImage photograph(const LabelMask& m) {
  std::vector<std::uint8_t> rgb;
  rgb.reserve(m.size() * 3);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const auto& c = kClassPalette[m.at(x, y)];
      const int jitter = static_cast<int>((static_cast<unsigned>(x) * 73856093u ^ static_cast<unsigned>(y) * 19349663u) % 17u) - 8;
      for (auto v : c) rgb.push_back(static_cast<std::uint8_t>(std::clamp(int(v) + jitter, 0, 255)));
    }
  }
  return {m.width(), m.height(), std::move(rgb)};
}

ChangeMask label_change(const LabelMask& a, const LabelMask& b) {
  std::vector<std::uint8_t> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a.labels()[i] != b.labels()[i];
  return {a.width(), a.height(), std::move(out)};
}

struct Pair {
  std::string id;
  LabelMask pre;
  LabelMask cur;
  DetectionSet det_pre;
  DetectionSet det_cur;
  std::string caption_pre;
  std::string caption_cur;
};

Detection box(std::string cls, int x, int y, int w, int h, double score) {
  return {std::move(cls), CropRegion{x, y, w, h}, score};
}

std::map<std::string, Pair> build_pairs() {
  std::map<std::string, Pair> pairs;
  using C = LandClass;

  {  // farmland on the urban fringe: new buildings and a road spur
    Pair p{"3f9a01", {}, {}, {}, {}, "", ""};
    Canvas pre;
    pre.fill(C::Farmland).rect(0, 30, 64, 4, C::Road).rect(44, 44, 12, 12, C::Water).rect(0, 0, 16, 16, C::Forest);
    Canvas cur = pre;
    cur.rect(8, 40, 16, 16, C::Building).rect(36, 8, 20, 12, C::Building).rect(30, 0, 4, 30, C::Road);
    p.pre = pre.mask();
    p.cur = cur.mask();
    p.caption_pre = "farmland crossed by a road, with a small pond and a patch of forest";
    p.caption_cur = "farmland crossed by roads, with two new building blocks, a pond and a patch of forest";
    pairs[p.id] = p;
  }
  {  // a lake that has grown, a barren patch on farmland
    Pair p{"7c2e45", {}, {}, {}, {}, "", ""};
    Canvas pre;
    pre.fill(C::Farmland).rect(32, 0, 32, 64, C::Forest).rect(20, 20, 16, 16, C::Water);
    Canvas cur;
    cur.fill(C::Farmland).rect(32, 0, 32, 64, C::Forest).rect(16, 16, 24, 24, C::Water).rect(0, 0, 8, 8, C::Barren);
    p.pre = pre.mask();
    p.cur = cur.mask();
    p.caption_pre = "a small lake between farmland and forest";
    p.caption_cur = "a larger lake between farmland and forest, with bare ground in a corner";
    pairs[p.id] = p;
  }
  {  // harbor: ships on the water, storage tanks and quays on land
    Pair p{"b40d17", {}, {}, {}, {}, "", ""};
    Canvas pre;
    pre.fill(C::Barren).rect(0, 0, 64, 32, C::Water).rect(0, 32, 64, 4, C::Road);
    Canvas cur = pre;
    for (int x : {24, 34, 44, 54}) cur.rect(x, 40, 6, 6, C::Building);
    p.pre = pre.mask();
    p.cur = cur.mask();
    p.det_pre.entries = {box("ship", 4, 4, 4, 3, 0.91), box("ship", 12, 10, 4, 3, 0.85),
                         box("ship", 40, 6, 4, 3, 0.80), box("ship", 50, 20, 4, 3, 0.30),
                         box("storage tank", 4, 40, 6, 6, 0.90), box("storage tank", 14, 40, 6, 6, 0.88),
                         box("harbor", 0, 26, 16, 8, 0.95)};
    p.det_cur.entries = p.det_pre.entries;
    for (auto d : {box("ship", 20, 20, 4, 3, 0.90), box("ship", 56, 12, 4, 3, 0.70),
                   box("storage tank", 24, 40, 6, 6, 0.90), box("storage tank", 34, 40, 6, 6, 0.80),
                   box("storage tank", 44, 40, 6, 6, 0.75), box("storage tank", 54, 40, 6, 6, 0.60),
                   box("harbor", 40, 26, 16, 8, 0.90)}) {
      p.det_cur.entries.push_back(d);
    }
    p.caption_pre = "a harbor with a few ships and two storage tanks";
    p.caption_cur = "a busier harbor with more ships, a second quay and a row of storage tanks";
    pairs[p.id] = p;
  }
  {  // airport apron: planes leave, vehicles arrive, a hangar is built
    Pair p{"e81c3b", {}, {}, {}, {}, "", ""};
    Canvas pre;
    pre.fill(C::Background).rect(0, 4, 64, 12, C::Road).rect(0, 36, 64, 8, C::Road);
    Canvas cur = pre;
    cur.rect(48, 48, 12, 12, C::Building);
    p.pre = pre.mask();
    p.cur = cur.mask();
    for (int i = 0; i < 6; ++i) p.det_pre.entries.push_back(box("plane", 4 + 10 * i, 8, 6, 6, 0.9));
    for (int i : {0, 1, 4, 5}) p.det_cur.entries.push_back(box("plane", 4 + 10 * i, 8, 6, 6, 0.9));
    for (int i = 0; i < 10; ++i) p.det_pre.entries.push_back(box("vehicle", 2 + 4 * i, 40, 2, 2, 0.8));
    for (int i = 0; i < 13; ++i) p.det_cur.entries.push_back(box("vehicle", 2 + 4 * i, 40, 2, 2, 0.8));
    p.det_cur.entries.push_back(box("plane", 50, 50, 6, 6, 0.2));
    p.caption_pre = "an airport apron with six parked planes and service vehicles";
    p.caption_cur = "an airport apron with four parked planes, more service vehicles and a new hangar";
    pairs[p.id] = p;
  }
  {  // unchanged countryside
    Pair p{"59d6a2", {}, {}, {}, {}, "", ""};
    Canvas pre;
    pre.fill(C::Farmland).rect(0, 0, 64, 20, C::Forest);
    p.pre = pre.mask();
    p.cur = pre.mask();
    p.caption_pre = "farmland below a strip of forest";
    p.caption_cur = "farmland below a strip of forest";
    pairs[p.id] = p;
  }
  {  // farmland fully built over
    Pair p{"c03f88", {}, {}, {}, {}, "", ""};
    p.pre = Canvas{}.fill(C::Farmland).mask();
    p.cur = Canvas{}.fill(C::Building).mask();
    p.caption_pre = "open farmland";
    p.caption_cur = "a dense built-up area";
    pairs[p.id] = p;
  }
  {  // forest cleared to bare ground around a pond
    Pair p{"1a7b5e", {}, {}, {}, {}, "", ""};
    Canvas pre;
    pre.fill(C::Forest).rect(24, 24, 16, 16, C::Water);
    Canvas cur;
    cur.fill(C::Barren).rect(24, 24, 16, 16, C::Water);
    p.pre = pre.mask();
    p.cur = cur.mask();
    p.caption_pre = "dense forest around a pond";
    p.caption_cur = "cleared bare ground around a pond";
    pairs[p.id] = p;
  }
  return pairs;
}

json detections_json(const DetectionSet& set) {
  json arr = json::array();
  for (const auto& d : set.entries) {
    arr.push_back({{"class", d.class_name}, {"box", {d.box.x, d.box.y, d.box.w, d.box.h}}, {"score", d.score}});
  }
  return {{"detections", arr}};
}

void write_pair(const fs::path& out, const Pair& p) {
  write_file(out / "images" / (p.id + "_pre.png"), encode_rgb(photograph(p.pre)));
  write_file(out / "images" / (p.id + "_cur.png"), encode_rgb(photograph(p.cur)));
  const auto tools = out / "tools";
  write_file(tools / "binary_change_detection" / (p.id + ".png"), encode_change_mask(label_change(p.pre, p.cur)));
  write_file(tools / "semantic_segmentation" / (p.id + "_pre.png"), encode_label_mask(p.pre));
  write_file(tools / "semantic_segmentation" / (p.id + "_cur.png"), encode_label_mask(p.cur));
  write_text_file(tools / "scene_classification" / (p.id + "_pre.txt"),
                  std::string(class_name(dominant_class(p.pre))) + "\n");
  write_text_file(tools / "scene_classification" / (p.id + "_cur.txt"),
                  std::string(class_name(dominant_class(p.cur))) + "\n");
  write_text_file(tools / "image_captioning" / (p.id + "_pre.txt"), p.caption_pre + "\n");
  write_text_file(tools / "image_captioning" / (p.id + "_cur.txt"), p.caption_cur + "\n");
  write_text_file(tools / "object_detection" / (p.id + "_pre.json"), detections_json(p.det_pre).dump(2) + "\n");
  write_text_file(tools / "object_detection" / (p.id + "_cur.json"), detections_json(p.det_cur).dump(2) + "\n");
}

// Objects of one class whose box centre lies in the region (whole image when
// no region), counted from the raw detection list.
std::size_t objects_in(const DetectionSet& set, std::string_view cls, std::optional<CropRegion> r) {
  std::size_t n = 0;
  for (const auto& d : set.entries) {
    if (d.class_name != cls || d.score < kDefaultMinScore) continue;
    const int cx = d.box.x + d.box.w / 2;
    const int cy = d.box.y + d.box.h / 2;
    if (r && (cx < r->x || cy < r->y || cx >= r->x + r->w || cy >= r->y + r->h)) continue;
    ++n;
  }
  return n;
}

AnswerSpec boolean(bool yes) { return {BooleanAnswer{yes}}; }
AnswerSpec numeric(double v) { return {NumericAnswer{v, std::floor(v) == v ? 0.0 : 0.01}}; }
AnswerSpec categorical(std::vector<std::string> names) { return {CategoricalAnswer{std::move(names)}}; }
AnswerSpec checklist(std::vector<AnswerSpec> items) { return {ChecklistAnswer{std::move(items)}}; }
AnswerSpec direction(std::int64_t delta) {
  return delta >= 0 ? categorical({"increased", "increase", "grew", "more"})
                    : categorical({"decreased", "decrease", "shrank", "fewer"});
}

double percent(std::uint64_t n, std::uint64_t total) {
  return 100.0 * static_cast<double>(n) / static_cast<double>(total);
}

// Drives a replay session the same way the agent will, collecting the
// completions a correct model would produce.
class ScriptWriter {
 public:
  ScriptWriter(const Question& q, const ToolRegistry& registry) : registry_(registry) {
    session_ = make_replay_session(q.id);
    prepare_session(*session_, q);
  }

  std::string file(std::string_view ref) const { return session_->images().get(ref).filename; }

  /// Runs the tool and returns its observation; `needle` must appear in it.
  std::string act(std::string_view thought, std::string_view tool, std::string input,
                  std::string_view needle = {}, std::string_view trailer = {}) {
    auto inv = registry_.invoke(*session_, tool, input);
    if (!needle.empty() && inv.observation.find(needle) == std::string::npos) {
      throw std::runtime_error(fmt::format("{} observation lacks '{}':\n{}", tool, needle, inv.observation));
    }
    completions_.push_back(fmt::format("Thought: Do I need to use a tool? Yes. {}\nAction: {}\nAction Input: {}{}",
                                       thought, tool, input, trailer));
    last_images_ = inv.produced_images;
    return inv.observation;
  }

  std::string produced() const { return session_->images().get(last_images_.at(0)).filename; }

  void finish(std::string_view thought, std::string_view answer) {
    completions_.push_back(
        fmt::format("Thought: Do I need to use a tool? No. {}\nFinal Answer: {}", thought, answer));
  }

  [[nodiscard]] json script() const { return completions_; }

 private:
  const ToolRegistry& registry_;
  std::unique_ptr<Session> session_;
  std::vector<std::string> completions_;
  std::vector<std::string> last_images_;
};

struct Item {
  Question q;
  json script;
};

Question question(std::string id, QType t, std::string sub, std::string text, const Pair& p,
                  ToolMultiset tools, AnswerSpec ref, std::optional<CropSpec> crop = std::nullopt) {
  Question q;
  q.id = std::move(id);
  q.qtype = t;
  q.subtype = std::move(sub);
  q.text = std::move(text);
  q.pre = fs::path("images") / (p.id + "_pre.png");
  q.cur = fs::path("images") / (p.id + "_cur.png");
  q.pair_id = p.id;
  q.crop = crop;
  q.required_tools = std::move(tools);
  q.reference = std::move(ref);
  return q;
}

std::string count_str(std::uint64_t n) { return std::to_string(n); }

std::vector<Item> build_questions(const std::map<std::string, Pair>& pairs, const fs::path& out,
                                  const ToolRegistry& registry) {
  std::vector<Item> items;
  const auto& urban = pairs.at("3f9a01");
  const auto& lake = pairs.at("7c2e45");
  const auto& harbor = pairs.at("b40d17");
  const auto& airport = pairs.at("e81c3b");
  const auto& still = pairs.at("59d6a2");
  const auto& builtup = pairs.at("c03f88");
  const auto& cleared = pairs.at("1a7b5e");
  const std::uint64_t total = kSize * kSize;

  // Writers resolve image paths against the output directory.
  auto writer = [&](const Question& q) {
    Question abs = q;
    abs.pre = out / q.pre;
    abs.cur = out / q.cur;
    return ScriptWriter(abs, registry);
  };
  auto pair_files = [](ScriptWriter& w, std::string_view pre = "pre", std::string_view cur = "cur") {
    return fmt::format("pre={}, cur={}", w.file(pre), w.file(cur));
  };

  // ---- Whether ----
  for (const auto* p : {&urban, &still}) {
    const auto changed = count_changed_pixels(label_change(p->pre, p->cur));
    const bool yes = changed > 0;
    auto q = question(p == &urban ? "whether-01" : "whether-02", QType::Whether, "/",
                      "Is there a discernible difference between the images indicating changes?", *p,
                      {"whether_change"}, boolean(yes));
    auto w = writer(q);
    // The first model reply runs on past the stop word, as real models do.
    w.act("I should compare the previous and current images.", "whether_change", pair_files(w),
          yes ? "changed: yes" : "changed: no", yes ? "\nObservation: changed: no" : "");
    w.finish(yes ? "The tool found changed pixels." : "The tool found no changed pixels.",
             yes ? fmt::format("Yes, there is a discernible change: about {:.2f}% of the pixels differ.",
                               percent(changed, total))
                 : "No, the two images show no discernible change.");
    items.push_back({q, w.script()});
  }

  // ---- Size / Basic ----
  for (const auto* p : {&urban, &cleared}) {
    const auto changed = count_changed_pixels(label_change(p->pre, p->cur));
    const double pct = percent(changed, total);
    auto q = question(p == &urban ? "size-basic-01" : "size-basic-02", QType::Size, "Basic",
                      "Estimate the percentage of the changed area relative to the total image size.", *p,
                      {"binary_change_detection", "pixel_counting"}, numeric(pct));
    auto w = writer(q);
    w.act("I need a change map of the pair first.", "binary_change_detection", pair_files(w));
    const auto map = w.produced();
    w.act("Now I count the changed pixels in the change map.", "pixel_counting", "image=" + map,
          "changed_pixels: " + count_str(changed));
    w.finish("I now know the changed share of the image.",
             fmt::format("About {:.2f}% of the image has changed ({} of {} pixels).", pct, changed, total));
    items.push_back({q, w.script()});
  }

  // ---- Size / Certain Class ----
  {
    struct Case {
      const Pair* p;
      std::string id;
      std::string text;
      std::string cls;
    };
    for (const auto& c : {Case{&lake, "size-class-01",
                               "What proportion of the water bodies has increased or decreased in size, "
                               "expressed as a percentage?",
                               "water"},
                          Case{&urban, "size-class-02",
                               "By what percentage has the farmland area grown or shrunk between the two "
                               "images?",
                               "farmland"}}) {
      const auto cls = *class_from_name(c.cls);
      const auto delta = class_size_delta(c.p->pre, c.p->cur, cls);
      const double pct = *delta.pct_change;
      const auto diff = static_cast<std::int64_t>(delta.cur_count) - static_cast<std::int64_t>(delta.pre_count);
      auto q = question(c.id, QType::Size, "Certain Class", c.text, *c.p,
                        {"semantic_segmentation", "semantic_segmentation", "pixel_counting", "pixel_counting"},
                        checklist({direction(diff), numeric(std::abs(pct))}));
      auto w = writer(q);
      w.act("I need a land-use map of the previous image.", "semantic_segmentation", "image=" + w.file("pre"));
      const auto pre_map = w.produced();
      w.act("I also need a land-use map of the current image.", "semantic_segmentation", "image=" + w.file("cur"));
      const auto cur_map = w.produced();
      w.act(fmt::format("I count {} pixels in the previous land-use map.", c.cls), "pixel_counting",
            fmt::format("image={}, class={}", pre_map, c.cls), "pixels: " + count_str(delta.pre_count));
      w.act(fmt::format("I count {} pixels in the current land-use map.", c.cls), "pixel_counting",
            fmt::format("image={}, class={}", cur_map, c.cls), "pixels: " + count_str(delta.cur_count));
      w.finish("I can compare the two counts.",
               fmt::format("The {} area {} by {:.2f}% (from {} to {} pixels).", c.cls,
                           diff >= 0 ? "increased" : "decreased", std::abs(pct), delta.pre_count,
                           delta.cur_count));
      items.push_back({q, w.script()});
    }
  }

  // ---- Size / Local Area ----
  {
    struct Case {
      const Pair* p;
      std::string id;
      CropRegion region;
    };
    for (const auto& c : {Case{&urban, "size-local-01", {0, 32, 32, 32}},
                          Case{&lake, "size-local-02", {16, 16, 32, 32}}}) {
      const auto changed = count_changed_pixels(crop(label_change(c.p->pre, c.p->cur), c.region));
      const auto area = static_cast<std::uint64_t>(c.region.w) * static_cast<std::uint64_t>(c.region.h);
      const double pct = percent(changed, area);
      auto q = question(c.id, QType::Size, "Local Area",
                        "In the localized area I have cropped, what percentage of the area has undergone "
                        "changes?",
                        *c.p, {"binary_change_detection", "pixel_counting"}, numeric(pct),
                        CropSpec{c.region, CropParent::Both});
      auto w = writer(q);
      w.act("I need a change map of the two cropped images.", "binary_change_detection",
            pair_files(w, "crppre", "crpcur"));
      const auto map = w.produced();
      w.act("Now I count the changed pixels of the cropped change map.", "pixel_counting", "image=" + map,
            "changed_pixels: " + count_str(changed));
      w.finish("I know the changed share of the cropped area.",
               fmt::format("{:.2f}% of the cropped area has changed ({} of {} pixels).", pct, changed, area));
      items.push_back({q, w.script()});
    }
  }

  // ---- Size / Analysis ----
  {
    auto count = [](const LabelMask& m, std::string_view cls) { return count_class_pixels(m, *class_from_name(cls)); };
    struct Row {
      std::string cls;
      std::uint64_t pre;
      std::uint64_t cur;
    };
    struct Case {
      const Pair* p;
      std::string id;
      std::string text;
      std::vector<std::string> classes;
      std::string closing;
    };
    for (const auto& c :
         {Case{&urban, "size-analysis-01",
               "Compare the pixel changes in Buildings and Roads (indicative of urban development) to "
               "Farmland, and quantify the shift to assess urban sprawl.",
               {"building", "road", "farmland"},
               "The built-up gain was taken from farmland, a clear sign of urban sprawl."},
          Case{&lake, "size-analysis-02",
               "Compare how the water area changed with the changes in farmland and forest, and report "
               "where the expansion came from.",
               {"water", "farmland", "forest"},
               "The lake expanded over both farmland and forest."}}) {
      std::vector<Row> rows;
      for (const auto& cls : c.classes) rows.push_back({cls, count(c.p->pre, cls), count(c.p->cur, cls)});
      std::vector<AnswerSpec> check;
      std::string answer;
      for (const auto& r : rows) {
        const auto diff = static_cast<std::int64_t>(r.cur) - static_cast<std::int64_t>(r.pre);
        check.push_back(categorical({r.cls}));
        check.push_back(numeric(static_cast<double>(std::abs(diff))));
        std::string label = r.cls == "road" ? "road area" : r.cls;
        label[0] = static_cast<char>(std::toupper(label[0]));
        answer += fmt::format("{} {} by {} pixels ({} to {}). ", label, diff >= 0 ? "grew" : "shrank",
                              std::abs(diff), r.pre, r.cur);
      }
      answer += c.closing;
      auto q = question(c.id, QType::Size, "Analysis", c.text, *c.p,
                        {"semantic_segmentation", "semantic_segmentation", "pixel_counting", "pixel_counting"},
                        checklist(std::move(check)));
      auto w = writer(q);
      w.act("I need a land-use map of the previous image.", "semantic_segmentation", "image=" + w.file("pre"));
      const auto pre_map = w.produced();
      w.act("I also need a land-use map of the current image.", "semantic_segmentation", "image=" + w.file("cur"));
      const auto cur_map = w.produced();
      w.act("I count every class in the previous land-use map.", "pixel_counting", "image=" + pre_map,
            rows[0].cls + "_pixels: " + count_str(rows[0].pre));
      w.act("I count every class in the current land-use map.", "pixel_counting", "image=" + cur_map,
            rows[0].cls + "_pixels: " + count_str(rows[0].cur));
      w.finish("I can compare the class counts.", answer);
      items.push_back({q, w.script()});
    }
  }

  // ---- Number / Basic ----
  {
    struct Case {
      const Pair* p;
      std::string id;
      std::string cls;
      std::string plural;
    };
    for (const auto& c : {Case{&harbor, "number-basic-01", "ship", "ships"},
                          Case{&airport, "number-basic-02", "plane", "planes"}}) {
      const auto a = objects_in(c.p->det_pre, c.cls, std::nullopt);
      const auto b = objects_in(c.p->det_cur, c.cls, std::nullopt);
      const auto diff = static_cast<std::int64_t>(b) - static_cast<std::int64_t>(a);
      auto q = question(c.id, QType::Number, "Basic",
                        fmt::format("Between the previous and current images, has there been an increase or "
                                    "decrease in the number of {}?",
                                    c.plural),
                        *c.p, {"object_counting", "object_counting"},
                        checklist({direction(diff), numeric(static_cast<double>(a)), numeric(static_cast<double>(b))}));
      auto w = writer(q);
      w.act(fmt::format("I count the {} in the previous image.", c.plural), "object_counting",
            fmt::format("image={}, class={}", w.file("pre"), c.cls), "count: " + count_str(a));
      w.act(fmt::format("I count the {} in the current image.", c.plural), "object_counting",
            fmt::format("image={}, class={}", w.file("cur"), c.cls), "count: " + count_str(b));
      w.finish("I can compare the counts.",
               fmt::format("The number of {} {} from {} to {}.", c.plural, diff >= 0 ? "increased" : "decreased", a, b));
      items.push_back({q, w.script()});
    }
  }

  // ---- Number / Local Area ----
  {
    struct Case {
      const Pair* p;
      std::string id;
      std::string cls;
      std::string plural;
      CropRegion region;
    };
    for (const auto& c : {Case{&harbor, "number-local-01", "ship", "ships", {0, 0, 32, 32}},
                          Case{&airport, "number-local-02", "plane", "planes", {32, 0, 32, 64}}}) {
      const auto a = objects_in(c.p->det_pre, c.cls, c.region);
      const auto b = objects_in(c.p->det_cur, c.cls, c.region);
      const auto diff = static_cast<std::int64_t>(b) - static_cast<std::int64_t>(a);
      auto q = question(c.id, QType::Number, "Local Area",
                        fmt::format("For the cropped area, can you calculate the change in the number of {} "
                                    "between the two images?",
                                    c.plural),
                        *c.p, {"object_counting", "object_counting"},
                        checklist({numeric(static_cast<double>(a)), numeric(static_cast<double>(b)),
                                   direction(diff), numeric(static_cast<double>(std::abs(diff)))}),
                        CropSpec{c.region, CropParent::Both});
      auto w = writer(q);
      w.act(fmt::format("I count the {} in the cropped previous image.", c.plural), "object_counting",
            fmt::format("image={}, class={}", w.file("crppre"), c.cls), "count: " + count_str(a));
      w.act(fmt::format("I count the {} in the cropped current image.", c.plural), "object_counting",
            fmt::format("image={}, class={}", w.file("crpcur"), c.cls), "count: " + count_str(b));
      w.finish("I can compare the counts.",
               fmt::format("In the cropped area there were {} {} before and {} now, so the number {} by {}.", a,
                           c.plural, b, diff >= 0 ? "increased" : "decreased", std::abs(diff)));
      items.push_back({q, w.script()});
    }
  }

  // ---- Number / Comparison ----
  {
    struct Case {
      const Pair* p;
      std::string id;
      std::string a_cls, a_plural, b_cls, b_plural;
    };
    for (const auto& c : {Case{&harbor, "number-compare-01", "storage tank", "storage tanks", "harbor", "harbors"},
                          Case{&airport, "number-compare-02", "plane", "planes", "vehicle", "vehicles"}}) {
      const auto a0 = objects_in(c.p->det_pre, c.a_cls, std::nullopt);
      const auto a1 = objects_in(c.p->det_cur, c.a_cls, std::nullopt);
      const auto b0 = objects_in(c.p->det_pre, c.b_cls, std::nullopt);
      const auto b1 = objects_in(c.p->det_cur, c.b_cls, std::nullopt);
      const auto da = static_cast<std::int64_t>(a1) - static_cast<std::int64_t>(a0);
      const auto db = static_cast<std::int64_t>(b1) - static_cast<std::int64_t>(b0);
      const bool a_wins = std::abs(da) > std::abs(db);
      const auto& winner = a_wins ? c.a_plural : c.b_plural;
      auto n = [](std::size_t v) { return numeric(static_cast<double>(v)); };
      auto q = question(c.id, QType::Number, "Comparison",
                        fmt::format("Compare the change in the number of {} to the change in the number of {} "
                                    "between the previous and current images and determine which category "
                                    "experienced a greater change in number?",
                                    c.a_plural, c.b_plural),
                        *c.p, {"object_counting", "object_counting", "object_counting", "object_counting"},
                        checklist({categorical({c.a_cls}), n(a0), n(a1), categorical({c.b_cls}), n(b0), n(b1),
                                   categorical({a_wins ? c.a_cls : c.b_cls})}));
      auto w = writer(q);
      for (const auto& [cls, plural, ref, expect] :
           {std::tuple{c.a_cls, c.a_plural, "pre", a0}, std::tuple{c.a_cls, c.a_plural, "cur", a1},
            std::tuple{c.b_cls, c.b_plural, "pre", b0}, std::tuple{c.b_cls, c.b_plural, "cur", b1}}) {
        w.act(fmt::format("I count the {} in the {} image.", plural, std::string_view(ref) == "pre" ? "previous" : "current"),
              "object_counting", fmt::format("image={}, class={}", w.file(ref), cls), "count: " + count_str(expect));
      }
      auto signed_str = [](std::int64_t d) { return fmt::format("{:+d}", d); };
      std::string answer = fmt::format("{} went from {} to {} ({}) while {} went from {} to {} ({}), so {} experienced the greater change.",
                                       c.a_plural, a0, a1, signed_str(da), c.b_plural, b0, b1, signed_str(db), winner);
      answer[0] = static_cast<char>(std::toupper(answer[0]));
      w.finish("I can compare both changes.", answer);
      items.push_back({q, w.script()});
    }
  }

  // ---- Class / Whole Image ----
  {
    const auto before = std::string(class_name(dominant_class(builtup.pre)));
    const auto after = std::string(class_name(dominant_class(builtup.cur)));
    auto q = question("class-whole-01", QType::Class, "Whole Image",
                      "What class covered the entire area of the previous image, and to what class does the "
                      "entire area belong now?",
                      builtup, {"scene_classification", "scene_classification"},
                      checklist({categorical({before}), categorical({after})}));
    auto w = writer(q);
    w.act("I classify the scene of the previous image.", "scene_classification", "image=" + w.file("pre"),
          "scene: " + before);
    w.act("I classify the scene of the current image.", "scene_classification", "image=" + w.file("cur"),
          "scene: " + after);
    w.finish("I know both classes.",
             fmt::format("The previous image was entirely {}, and the whole area is now {}.", before, after));
    items.push_back({q, w.script()});
  }
  {
    const auto bc = dominant_class(cleared.pre);
    const auto ac = dominant_class(cleared.cur);
    const auto before = std::string(class_name(bc));
    const auto after = std::string(class_name(ac));
    auto q = question("class-whole-02", QType::Class, "Whole Image",
                      "Which land-cover class dominated the previous image, and which class dominates the "
                      "current image?",
                      cleared, {"semantic_segmentation", "semantic_segmentation", "pixel_counting", "pixel_counting"},
                      checklist({categorical({before}), categorical({after})}));
    auto w = writer(q);
    w.act("I need a land-use map of the previous image.", "semantic_segmentation", "image=" + w.file("pre"));
    const auto pre_map = w.produced();
    w.act("I also need a land-use map of the current image.", "semantic_segmentation", "image=" + w.file("cur"));
    const auto cur_map = w.produced();
    w.act("I count every class in the previous land-use map.", "pixel_counting", "image=" + pre_map,
          before + "_pixels: " + count_str(count_class_pixels(cleared.pre, bc)));
    w.act("I count every class in the current land-use map.", "pixel_counting", "image=" + cur_map,
          after + "_pixels: " + count_str(count_class_pixels(cleared.cur, ac)));
    w.finish("I can name the largest class of each map.",
             fmt::format("Before the change the area was mostly {} ({} of {} pixels); now it is mostly {} ({} pixels).",
                         before, count_class_pixels(cleared.pre, bc), total, after,
                         count_class_pixels(cleared.cur, ac)));
    items.push_back({q, w.script()});
  }

  // ---- Class / Local Area ----
  {
    const CropRegion region{8, 40, 16, 16};
    const auto cls = std::string(class_name(dominant_class(crop(urban.pre, region))));
    write_text_file(out / "tools" / "scene_classification" /
                        fmt::format("{}_pre_crop_{}_{}_{}_{}.txt", urban.id, region.x, region.y, region.w, region.h),
                    cls + "\n");
    auto q = question("class-local-01", QType::Class, "Local Area",
                      "In the area I have cropped from the whole image, what was the class before the change "
                      "occurred?",
                      urban, {"scene_classification"}, categorical({cls}), CropSpec{region, CropParent::Pre});
    auto w = writer(q);
    w.act("I classify the cropped previous image.", "scene_classification", "image=" + w.file("crppre"),
          "scene: " + cls);
    w.finish("I know the class of the cropped area.", fmt::format("Before the change, the cropped area was {}.", cls));
    items.push_back({q, w.script()});
  }
  {
    const CropRegion region{16, 16, 24, 24};
    const auto sub = crop(lake.pre, region);
    const auto dc = dominant_class(sub);
    const auto cls = std::string(class_name(dc));
    auto q = question("class-local-02", QType::Class, "Local Area",
                      "What was the main land-cover class of the area I cropped from the previous image?", lake,
                      {"semantic_segmentation", "pixel_counting"}, categorical({cls}),
                      CropSpec{region, CropParent::Pre});
    auto w = writer(q);
    w.act("I need a land-use map of the cropped previous image.", "semantic_segmentation",
          "image=" + w.file("crppre"));
    const auto map = w.produced();
    w.act("I count every class in the cropped land-use map.", "pixel_counting", "image=" + map,
          cls + "_pixels: " + count_str(count_class_pixels(sub, dc)));
    w.finish("The largest class is the answer.",
             fmt::format("The cropped area was mainly {} ({} of {} pixels).", cls, count_class_pixels(sub, dc),
                         sub.size()));
    items.push_back({q, w.script()});
  }
  return items;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <output dir>\n";
    return 2;
  }
  const fs::path out = argv[1];
  try {
    const auto pairs = build_pairs();
    for (const auto& [id, p] : pairs) write_pair(out, p);

    ToolkitConfig config;
    config.fixtures_dir = out / "tools";
    const auto registry = make_default_registry(config);
    const auto items = build_questions(pairs, out, registry);

    std::string lines;
    for (const auto& item : items) {
      lines += question_to_json(item.q).dump() + "\n";
      write_text_file(out / "scripts" / (item.q.id + ".json"), item.script.dump(2) + "\n");
    }
    write_text_file(out / "dataset.jsonl", lines);
    std::cout << "wrote " << items.size() << " questions to " << out.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
