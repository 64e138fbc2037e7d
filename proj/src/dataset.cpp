#include <fstream>

#include "changegpt/error.hpp"
#include "changegpt/eval.hpp"
#include "changegpt/text.hpp"

namespace changegpt {

using nlohmann::json;

std::string_view to_string(QType t) {
  switch (t) {
    case QType::Whether: return "Whether";
    case QType::Size: return "Size";
    case QType::Number: return "Number";
    case QType::Class: return "Class";
  }
  return "Whether";
}

std::optional<QType> qtype_from_string(std::string_view s) {
  for (auto t : {QType::Whether, QType::Size, QType::Number, QType::Class}) {
    if (iequals(s, to_string(t))) return t;
  }
  return std::nullopt;
}

const std::vector<std::string>& legal_subtypes(QType t) {
  static const std::vector<std::string> whether{"/"};
  static const std::vector<std::string> size{"Basic", "Certain Class", "Local Area", "Analysis"};
  static const std::vector<std::string> number{"Basic", "Local Area", "Comparison"};
  static const std::vector<std::string> klass{"Whole Image", "Local Area"};
  switch (t) {
    case QType::Whether: return whether;
    case QType::Size: return size;
    case QType::Number: return number;
    case QType::Class: return klass;
  }
  return whether;
}

namespace {

[[noreturn]] void fail(const std::string& why) { throw Error(ErrorCode::DatasetError, why); }

CropRegion region_from_json(const json& j) {
  CropRegion r;
  if (j.is_array()) {
    if (j.size() != 4) fail("crop region must be [x, y, w, h]");
    r = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
  } else {
    r = {j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
  }
  if (r.x < 0 || r.y < 0 || r.w <= 0 || r.h <= 0) fail("crop region must be non-negative with w, h > 0");
  return r;
}

std::string_view crop_parent_name(CropParent p) {
  switch (p) {
    case CropParent::Pre: return "pre";
    case CropParent::Cur: return "cur";
    case CropParent::Both: return "both";
  }
  return "pre";
}

}  // namespace

Question question_from_json(const json& j) {
  if (!j.is_object()) fail("record is not a JSON object");
  Question q;
  try {
    q.id = j.at("id").get<std::string>();
    const auto type_name = j.at("qtype").get<std::string>();
    const auto type = qtype_from_string(type_name);
    if (!type) fail("unknown qtype '" + type_name + "'");
    q.qtype = *type;
    q.subtype = j.value("subtype", std::string("/"));
    q.text = j.at("text").get<std::string>();

    const auto& images = j.at("images");
    q.pre = images.at("pre").get<std::string>();
    q.cur = images.at("cur").get<std::string>();
    if (images.contains("pair_id")) q.pair_id = images.at("pair_id").get<std::string>();
    if (images.contains("crop") && !images.at("crop").is_null()) {
      const auto& c = images.at("crop");
      CropSpec spec;
      spec.region = region_from_json(c.at("region"));
      const auto parent = to_lower(c.value("parent", std::string("pre")));
      if (parent == "pre") {
        spec.parent = CropParent::Pre;
      } else if (parent == "cur") {
        spec.parent = CropParent::Cur;
      } else if (parent == "both") {
        spec.parent = CropParent::Both;
      } else {
        fail("crop parent must be 'pre', 'cur' or 'both'");
      }
      q.crop = spec;
    }

    q.required_tools = j.at("required_tools").get<ToolMultiset>();
    q.reference = answer_spec_from_json(j.at("reference"));
  } catch (const json::exception& e) {
    fail(std::string("bad field: ") + e.what());
  }

  if (q.id.empty()) fail("empty id");
  const auto& legal = legal_subtypes(q.qtype);
  auto it = std::find_if(legal.begin(), legal.end(),
                         [&](const std::string& s) { return iequals(s, q.subtype); });
  if (it == legal.end()) {
    fail("subtype '" + q.subtype + "' is not legal for " + std::string(to_string(q.qtype)));
  }
  q.subtype = *it;
  if (q.required_tools.empty()) fail("required_tools is empty");
  if (q.subtype == "Analysis" && !std::holds_alternative<ChecklistAnswer>(q.reference.kind)) {
    fail("Analysis questions need a checklist reference");
  }
  return q;
}

json question_to_json(const Question& q) {
  json images{{"pre", q.pre.generic_string()}, {"cur", q.cur.generic_string()}};
  if (q.pair_id) images["pair_id"] = *q.pair_id;
  if (q.crop) {
    const auto& r = q.crop->region;
    images["crop"] = {{"region", {r.x, r.y, r.w, r.h}}, {"parent", crop_parent_name(q.crop->parent)}};
  }
  return {{"id", q.id},
          {"qtype", to_string(q.qtype)},
          {"subtype", q.subtype},
          {"text", q.text},
          {"images", images},
          {"required_tools", q.required_tools},
          {"reference", answer_spec_to_json(q.reference)}};
}

std::vector<Question> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open dataset " + path.string());
  const auto base = path.parent_path();
  std::vector<Question> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        fail(std::string("invalid JSON: ") + e.what());
      }
      Question q = question_from_json(j);
      if (q.pre.is_relative()) q.pre = base / q.pre;
      if (q.cur.is_relative()) q.cur = base / q.cur;
      for (const auto& prev : out) {
        if (prev.id == q.id) fail("duplicate id '" + q.id + "'");
      }
      out.push_back(std::move(q));
    } catch (const Error& e) {
      fail(path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace changegpt
