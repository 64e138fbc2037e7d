#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "changegpt/agent.hpp"
#include "changegpt/error.hpp"
#include "changegpt/png_io.hpp"
#include "changegpt/toolkit.hpp"
#include "test_paths.hpp"

using namespace changegpt;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::IoError;
}

ToolkitConfig fixture_config() {
  ToolkitConfig cfg;
  cfg.fixtures_dir = testpaths::fixtures() / "tools";
  return cfg;
}

std::unique_ptr<Session> pair_session(const std::string& pair) {
  Question q;
  q.id = "t";
  q.pre = testpaths::fixtures() / "images" / (pair + "_pre.png");
  q.cur = testpaths::fixtures() / "images" / (pair + "_cur.png");
  q.pair_id = pair;
  auto s = make_replay_session();
  prepare_session(*s, q);
  return s;
}

std::string field(const std::string& observation, const std::string& key) {
  const auto pos = observation.find("\n" + key + ": ");
  if (pos == std::string::npos) return {};
  const auto start = pos + key.size() + 3;
  return observation.substr(start, observation.find('\n', start) - start);
}

}  // namespace

TEST(ToolArgs, KeyValueAndBareImage) {
  auto a = ToolArgs::parse(" image=abc.png , Class = water ");
  EXPECT_EQ(a.get("image"), "abc.png");
  EXPECT_EQ(a.get("class"), "water");
  a = ToolArgs::parse("\"abc.png\"");
  EXPECT_EQ(a.get("image"), "abc.png");
  a = ToolArgs::parse(R"({"pre": "a.png", "cur": "b.png"})");
  EXPECT_EQ(a.get("cur"), "b.png");
  EXPECT_EQ(a.require("pre"), "a.png");
  EXPECT_EQ(code_of([&] { (void)a.require("image"); }), ErrorCode::BadInput);
  EXPECT_EQ(code_of([] { ToolArgs::parse("a.png, b.png"); }), ErrorCode::BadInput);
  EXPECT_EQ(code_of([] { ToolArgs::parse("{broken"); }), ErrorCode::BadInput);
  EXPECT_EQ(code_of([] { ToolArgs::parse("=x"); }), ErrorCode::BadInput);
}

TEST(Registry, RenderAndErrors) {
  ToolRegistry empty;
  EXPECT_EQ(code_of([&] { (void)empty.render_tool_prompt(); }), ErrorCode::EmptyRegistry);

  const auto reg = make_default_registry(fixture_config());
  EXPECT_EQ(reg.size(), 8u);
  const auto r = reg.render_tool_prompt();
  EXPECT_EQ(r.tool_names,
            "binary_change_detection, image_captioning, scene_classification, semantic_segmentation, "
            "object_detection, object_counting, pixel_counting, whether_change");
  EXPECT_EQ(std::count(r.tools_block.begin(), r.tools_block.end(), '\n'), 7);
  EXPECT_EQ(r.tools_block.rfind("binary_change_detection: ", 0), 0u);

  auto copy = make_default_registry(fixture_config());
  EXPECT_EQ(code_of([&] { copy.register_tool({"pixel_counting", "x", "", {}}, nullptr); }),
            ErrorCode::DuplicateName);
  Session s;
  EXPECT_EQ(code_of([&] { reg.invoke(s, "teleport", ""); }), ErrorCode::UnknownTool);
}

TEST(Tools, ChangeDetectionThenPixelCounting) {
  const auto reg = make_default_registry(fixture_config());
  auto s = pair_session("3f9a01");
  const auto inv = reg.invoke(*s, "binary_change_detection", "pre=pre, cur=cur");
  ASSERT_EQ(inv.produced_images.size(), 1u);
  const auto& rec = s->images().get(inv.produced_images[0]);
  EXPECT_EQ(rec.role.token(), "change");
  EXPECT_NE(inv.observation.find(rec.filename), std::string::npos);

  // Oracle: count the fixture mask directly.
  const auto mask = decode_change_mask(read_file(testpaths::fixtures() / "tools/binary_change_detection/3f9a01.png"));
  std::size_t changed = 0;
  for (auto v : mask.changed()) changed += v;
  const auto count = reg.invoke(*s, "pixel_counting", "image=" + rec.filename);
  EXPECT_EQ(field(count.observation, "changed_pixels"), std::to_string(changed));
  EXPECT_EQ(field(count.observation, "total_pixels"), "4096");
  // The same call by the single-image form of the pair.
  const auto again = reg.invoke(*s, "binary_change_detection", "image=cur");
  EXPECT_EQ(again.produced_images.size(), 1u);
}

TEST(Tools, WhetherChangeOnPhotos) {
  const auto reg = make_default_registry(fixture_config());
  auto changed = pair_session("3f9a01");
  EXPECT_EQ(field(reg.invoke(*changed, "whether_change", "pre=pre, cur=cur").observation, "changed"), "yes");
  auto same = pair_session("59d6a2");
  const auto obs = reg.invoke(*same, "whether_change", "pre=pre, cur=cur").observation;
  EXPECT_EQ(field(obs, "changed"), "no");
  EXPECT_EQ(field(obs, "changed_fraction"), "0.000000");
  EXPECT_EQ(code_of([&] { reg.invoke(*same, "whether_change", "pre=pre, cur=cur, min_fraction=2"); }),
            ErrorCode::BadInput);
}

TEST(Tools, SegmentationAndClassPixels) {
  const auto reg = make_default_registry(fixture_config());
  auto s = pair_session("7c2e45");
  const auto seg = reg.invoke(*s, "semantic_segmentation", "image=pre");
  ASSERT_EQ(seg.produced_images.size(), 1u);
  const auto& rec = s->images().get(seg.produced_images[0]);
  EXPECT_EQ(rec.role.token(), "landuse");

  const auto labels = decode_label_mask(read_file(testpaths::fixtures() / "tools/semantic_segmentation/7c2e45_pre.png"));
  std::size_t water = 0;
  for (auto v : labels.labels()) water += v == 1 ? 1 : 0;
  const auto obs = reg.invoke(*s, "pixel_counting", "image=" + rec.filename + ", class=water bodies").observation;
  EXPECT_EQ(field(obs, "pixels"), std::to_string(water));
  EXPECT_EQ(code_of([&] { reg.invoke(*s, "pixel_counting", "image=" + rec.filename + ", class=lava"); }),
            ErrorCode::BadInput);
  EXPECT_EQ(code_of([&] { reg.invoke(*s, "pixel_counting", "image=pre"); }), ErrorCode::BadInput);
}

TEST(Tools, ObjectCountingMatchesFixture) {
  const auto reg = make_default_registry(fixture_config());
  auto s = pair_session("e81c3b");
  const auto doc = json::parse(read_text_file(testpaths::fixtures() / "tools/object_detection/e81c3b_cur.json"));
  int planes = 0;
  for (const auto& d : doc.at("detections")) {
    if (d.at("class") == "plane" && d.at("score").get<double>() >= 0.5) ++planes;
  }
  const auto obs = reg.invoke(*s, "object_counting", "image=cur, class=planes").observation;
  EXPECT_EQ(field(obs, "count"), std::to_string(planes));
}

TEST(Tools, MissingFixtureAndUnknownImage) {
  const auto reg = make_default_registry(fixture_config());
  auto s = pair_session("7c2e45");
  const auto crop = s->crop_and_register(s->images().get("pre").self_id, {0, 0, 8, 8}).self_id;
  EXPECT_EQ(code_of([&] { reg.invoke(*s, "scene_classification", "image=" + crop); }),
            ErrorCode::FixtureMissing);
  EXPECT_EQ(code_of([&] { reg.invoke(*s, "image_captioning", "image=ffffff_ffffff_pre.png"); }),
            ErrorCode::UnknownImage);
}

TEST(Tools, InvocationIsLogged) {
  const auto reg = make_default_registry(fixture_config());
  auto s = pair_session("3f9a01");
  const auto before = s->log().entries().size();
  reg.invoke(*s, "image_captioning", "image=pre");
  const auto& entries = s->log().entries();
  ASSERT_GT(entries.size(), before);
  EXPECT_EQ(entries.back().kind, LogKind::ToolCall);
  EXPECT_NE(entries.back().payload.find("image_captioning"), std::string::npos);
}

TEST(Base64, RoundTrip) {
  const Bytes data = {0, 1, 2, 250, 251, 252, 253};
  for (std::size_t n = 0; n <= data.size(); ++n) {
    const Bytes part(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n));
    EXPECT_EQ(base64_decode(base64_encode(part)), part);
  }
  EXPECT_EQ(base64_encode(Bytes{'M', 'a', 'n'}), "TWFu");
}

class RemoteToolTest : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST_F(RemoteToolTest, ForwardsImagesAndRegistersOutputs) {
  json seen;
  server_.Post("/seg", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    const auto& img = seen.at("images").at(0);
    const LabelMask mask = LabelMask::filled(img.at("width"), img.at("height"), 5);
    json out = {{"observation", "segmented"},
                {"images", {{{"parent_id", img.at("id")}, {"tag", "landuse"}, {"kind", "label"},
                             {"png_base64", base64_encode(encode_label_mask(mask))}}}}};
    res.set_content(out.dump(), "application/json");
  });
  auto cfg = fixture_config();
  cfg.remote_endpoints["semantic_segmentation"] = url("/seg");
  const auto reg = make_default_registry(cfg);
  EXPECT_EQ(reg.find("semantic_segmentation")->backing.kind, BackingKind::Remote);
  auto s = pair_session("3f9a01");
  const auto inv = reg.invoke(*s, "semantic_segmentation", "image=pre");
  EXPECT_EQ(seen.at("tool"), "semantic_segmentation");
  EXPECT_EQ(seen.at("args").at("image"), "pre");
  const auto sent = decode_rgb(base64_decode(seen.at("images").at(0).at("png_base64").get<std::string>()));
  EXPECT_EQ(sent, std::get<RgbImage>(s->images().payload(s->images().get("pre").self_id)));
  ASSERT_EQ(inv.produced_images.size(), 1u);
  const auto& rec = s->images().get(inv.produced_images[0]);
  EXPECT_EQ(rec.role.token(), "landuse");
  EXPECT_NE(inv.observation.find("image: " + rec.filename), std::string::npos);
}

TEST_F(RemoteToolTest, ServiceErrorsAreRemoteErrors) {
  server_.Post("/fail", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("boom", "text/plain");
  });
  server_.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"nope\": 1}", "application/json");
  });
  auto cfg = fixture_config();
  cfg.remote_endpoints["image_captioning"] = url("/fail");
  cfg.remote_endpoints["scene_classification"] = url("/garbage");
  const auto reg = make_default_registry(cfg);
  auto s = pair_session("3f9a01");
  EXPECT_EQ(code_of([&] { reg.invoke(*s, "image_captioning", "image=pre"); }), ErrorCode::RemoteError);
  EXPECT_EQ(code_of([&] { reg.invoke(*s, "scene_classification", "image=pre"); }), ErrorCode::RemoteError);
}
