#include <gtest/gtest.h>

#include <random>

#include "changegpt/error.hpp"
#include "changegpt/images.hpp"
#include "changegpt/png_io.hpp"
#include "changegpt/session.hpp"
#include "test_paths.hpp"

using namespace changegpt;

namespace {

RgbImage solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  std::vector<std::uint8_t> v;
  for (int i = 0; i < w * h; ++i) v.insert(v.end(), {r, g, b});
  return {w, h, v};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Png, RgbRoundTrip) {
  std::vector<std::uint8_t> v;
  for (int i = 0; i < 5 * 3 * 3; ++i) v.push_back(static_cast<std::uint8_t>(i * 7));
  const RgbImage img(5, 3, v);
  EXPECT_EQ(decode_rgb(encode_rgb(img)), img);
}

TEST(Png, LabelRoundTripUsesPalette) {
  const LabelMask m(3, 3, {0, 1, 2, 3, 4, 5, 6, 6, 0});
  const auto png = encode_label_mask(m);
  EXPECT_EQ(decode_label_mask(png), m);
  const auto rgb = decode_rgb(png);
  EXPECT_EQ(rgb.rgb()[3 * 4 + 0], 255);  // building is red
  EXPECT_EQ(rgb.rgb()[3 * 4 + 1], 0);
  // A colorized mask decodes back to the same labels.
  EXPECT_EQ(decode_label_mask(encode_rgb(colorize(m))), m);
}

TEST(Png, ChangeRoundTrip) {
  const ChangeMask m(4, 2, {0, 1, 1, 0, 0, 0, 1, 1});
  EXPECT_EQ(decode_change_mask(encode_change_mask(m)), m);
}

TEST(Png, GarbageIsBadImage) {
  const Bytes junk = {'n', 'o', 't', ' ', 'a', ' ', 'p', 'n', 'g'};
  EXPECT_EQ(code_of([&] { decode_rgb(junk); }), ErrorCode::BadImage);
  auto png = encode_rgb(solid(4, 4, 1, 2, 3));
  png.resize(png.size() / 2);
  EXPECT_EQ(code_of([&] { decode_rgb(png); }), ErrorCode::BadImage);
}

TEST(Png, OffPaletteColourIsBadImage) {
  EXPECT_EQ(code_of([] { decode_label_mask(encode_rgb(solid(2, 2, 1, 2, 3))); }), ErrorCode::BadImage);
}

TEST(Naming, FormatAndParse) {
  EXPECT_EQ(format_filename("5092de", "a1b2c3", {RoleKind::CropPre, {}}), "5092de_a1b2c3_crppre.png");
  const auto p = parse_filename("image/5092de_a1b2c3_landuse.png");
  ASSERT_TRUE(p);
  EXPECT_EQ(p->self_id, "5092de");
  EXPECT_EQ(p->link_id, "a1b2c3");
  EXPECT_EQ(p->role_token, "landuse");
  EXPECT_FALSE(parse_filename("5092de_a1b2c3_pre.jpg"));
  EXPECT_FALSE(parse_filename("5092DE_a1b2c3_pre.png"));
  EXPECT_FALSE(parse_filename("5092de_a1b2c3.png"));
  EXPECT_FALSE(parse_filename("5092de_a1b2c3_land_use.png"));
  EXPECT_FALSE(parse_filename("5092de_a1b2c3_Landuse.png"));
}

TEST(Naming, MinterNeverRepeats) {
  IdMinter m(1);
  std::set<std::string> seen;
  for (int i = 0; i < 5000; ++i) {
    const auto id = m.mint();
    EXPECT_TRUE(is_hex_id(id));
    EXPECT_TRUE(seen.insert(id).second);
  }
  IdMinter a(42);
  IdMinter b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.mint(), b.mint());
}

TEST(Registry, PairCropDeriveLineage) {
  ImageRegistry reg(std::make_shared<IdMinter>(3));
  const auto& pre = reg.register_payload(solid(8, 8, 1, 1, 1), RoleKind::Pre, "3f9a01");
  const auto& cur = reg.register_payload(solid(8, 8, 2, 2, 2), RoleKind::Cur);
  EXPECT_EQ(pre.link_id, "3f9a01");
  EXPECT_EQ(cur.link_id, "3f9a01");
  EXPECT_EQ(pre.fixture_key, "3f9a01_pre");
  EXPECT_EQ(cur.fixture_key, "3f9a01_cur");
  const std::string pre_id = pre.self_id;
  const std::string cur_id = cur.self_id;

  const auto& c = reg.crop_and_register(pre_id, {2, 2, 4, 4});
  EXPECT_EQ(c.role.token(), "crppre");
  EXPECT_EQ(c.link_id, pre_id);
  EXPECT_EQ(c.width, 4);
  EXPECT_EQ(c.fixture_key, "3f9a01_pre_crop_2_2_4_4");
  const std::string crop_id = c.self_id;

  const auto& d = reg.register_derived(crop_id, "landuse", LabelMask::filled(4, 4, 1));
  EXPECT_EQ(d.link_id, crop_id);
  EXPECT_EQ(d.crop_region, (CropRegion{2, 2, 4, 4}));
  EXPECT_EQ(d.fixture_key, "3f9a01_pre_crop_2_2_4_4_landuse");
  EXPECT_EQ(reg.root_of(d.self_id).self_id, pre_id);
  EXPECT_EQ(reg.crop_and_register(cur_id, {0, 0, 2, 2}).role.token(), "crpcur");

  // Lookup forms.
  EXPECT_EQ(reg.get(pre_id).self_id, pre_id);
  EXPECT_EQ(reg.get(pre.filename).self_id, pre_id);
  EXPECT_EQ(reg.get("image/" + pre.filename).self_id, pre_id);
  EXPECT_EQ(reg.get("landuse").self_id, d.self_id);
  EXPECT_EQ(reg.get("crppre").self_id, crop_id);
  EXPECT_EQ(reg.find("nothere"), nullptr);
  EXPECT_EQ(code_of([&] { (void)reg.get("nothere"); }), ErrorCode::UnknownImage);
}

TEST(Registry, Errors) {
  ImageRegistry reg(std::make_shared<IdMinter>(5));
  const std::string pre = reg.register_payload(solid(8, 8, 1, 1, 1), RoleKind::Pre).self_id;
  EXPECT_EQ(code_of([&] { reg.register_payload(solid(8, 6, 1, 1, 1), RoleKind::Cur); }),
            ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([&] { reg.crop_and_register(pre, {4, 4, 5, 1}); }), ErrorCode::OutOfBounds);
  EXPECT_EQ(code_of([&] { reg.crop_and_register(pre, {0, 0, -1, 1}); }), ErrorCode::OutOfBounds);
  EXPECT_EQ(code_of([&] { reg.crop_and_register("abcdef", {0, 0, 1, 1}); }), ErrorCode::UnknownParent);
  EXPECT_EQ(code_of([&] { reg.register_derived(pre, "Bad_Tag", LabelMask::filled(8, 8, 0)); }),
            ErrorCode::BadInput);
  EXPECT_EQ(code_of([&] { reg.register_derived(pre, "crppre", LabelMask::filled(8, 8, 0)); }),
            ErrorCode::BadInput);
  const std::string d = reg.register_derived(pre, "landuse", LabelMask::filled(8, 8, 0)).self_id;
  EXPECT_EQ(code_of([&] { reg.crop_and_register(d, {0, 0, 1, 1}); }), ErrorCode::UnknownParent);
  EXPECT_EQ(code_of([&] { reg.register_payload(solid(8, 8, 1, 1, 1), RoleKind::Pre, "XYZ"); }),
            ErrorCode::BadInput);
}

TEST(Session, ExportImportRoundTrip) {
  const auto dir = testpaths::scratch("session_rt");
  Session s("abc123", std::make_shared<IdMinter>(9), std::make_unique<LogicalClock>());
  const std::string pre = s.register_payload(solid(6, 6, 9, 9, 9), RoleKind::Pre).self_id;
  s.register_payload(solid(6, 6, 8, 8, 8), RoleKind::Cur);
  const std::string c = s.crop_and_register(pre, {1, 1, 3, 3}).self_id;
  s.register_derived(c, "change", ChangeMask(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  s.history().append({"q1", "a1"});
  s.history().append({"q2", "a2"});
  s.export_to(dir);

  const auto back = Session::import_from(dir);
  EXPECT_EQ(back->id(), "abc123");
  EXPECT_EQ(back->created_at_ms(), s.created_at_ms());
  ASSERT_EQ(back->images().order(), s.images().order());
  for (const auto& id : s.images().order()) {
    const auto& a = s.images().get(id);
    const auto& b = back->images().get(id);
    EXPECT_EQ(a.filename, b.filename);
    EXPECT_EQ(a.role, b.role);
    EXPECT_EQ(a.crop_region, b.crop_region);
    EXPECT_EQ(a.fixture_key, b.fixture_key);
    EXPECT_EQ(s.images().payload(id), back->images().payload(id));
  }
  EXPECT_EQ(back->history().turns(), s.history().turns());
  ASSERT_EQ(back->log().entries().size(), s.log().entries().size());
  // Imported ids stay reserved so new images never collide.
  for (const auto& id : s.images().order()) EXPECT_TRUE(back->images().minter().issued(id));
}

TEST(Session, HistoryViewShowsEarlierTurnsOnly) {
  DialogueHistory h;
  h.append({"q1", "a1"});
  h.append({"q2", "a2"});
  h.append({"q3", "a3"});
  EXPECT_TRUE(h.view(1).turns().empty());
  EXPECT_EQ(h.view(3).turns().size(), 2u);
  EXPECT_EQ(h.view(3).turns().back().query, "q2");
  EXPECT_EQ(h.view(9).turns().size(), 3u);
  EXPECT_EQ(h.view(2).render(), "Human: q1\nAI: a1\n");
}

TEST(Session, ImportRejectsMissingState) {
  const auto dir = testpaths::scratch("session_missing");
  EXPECT_EQ(code_of([&] { Session::import_from(dir); }), ErrorCode::IoError);
}
