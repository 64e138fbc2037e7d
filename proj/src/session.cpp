#include "changegpt/session.hpp"

#include <json.hpp>

#include "changegpt/error.hpp"

namespace changegpt {

using nlohmann::json;

Session::Session(std::string id, std::shared_ptr<IdMinter> minter, std::unique_ptr<Clock> clock)
    : id_(std::move(id)),
      clock_(clock ? std::move(clock) : std::make_unique<LogicalClock>()),
      created_at_ms_(clock_->now_ms()),
      images_(std::move(minter)) {}

const ImageRecord& Session::logged(const ImageRecord& rec) {
  log_.append(clock_->now_ms(), LogKind::ImageRegistered,
              rec.filename + " (" + rec.role.token() + ", " + std::to_string(rec.width) + "x" +
                  std::to_string(rec.height) + ")");
  return rec;
}

const ImageRecord& Session::register_image(std::span<const std::uint8_t> png, RoleKind role,
                                           std::optional<std::string> pair_id) {
  return logged(images_.register_image(png, role, std::move(pair_id)));
}

const ImageRecord& Session::register_payload(ImagePayload payload, RoleKind role,
                                             std::optional<std::string> pair_id) {
  return logged(images_.register_payload(std::move(payload), role, std::move(pair_id)));
}

const ImageRecord& Session::crop_and_register(const std::string& parent_id,
                                              const CropRegion& region) {
  return logged(images_.crop_and_register(parent_id, region));
}

const ImageRecord& Session::register_derived(const std::string& parent_id, std::string tag,
                                             ImagePayload payload) {
  return logged(images_.register_derived(parent_id, std::move(tag), std::move(payload)));
}

void Session::export_to(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir / "images");
  json state;
  state["version"] = 1;
  state["session_id"] = id_;
  state["created_at_ms"] = created_at_ms_;
  json images = json::array();
  for (const auto& id : images_.order()) {
    const auto& rec = images_.get(id);
    const auto& payload = images_.payload(id);
    json r = {{"self_id", rec.self_id},     {"link_id", rec.link_id},
              {"role", rec.role.token()},   {"filename", rec.filename},
              {"width", rec.width},         {"height", rec.height},
              {"fixture_key", rec.fixture_key},
              {"kind", std::string(payload_kind(payload))}};
    if (rec.crop_region) {
      const auto& c = *rec.crop_region;
      r["crop_region"] = {{"x", c.x}, {"y", c.y}, {"w", c.w}, {"h", c.h}};
    }
    images.push_back(std::move(r));
    write_file(dir / "images" / rec.filename, encode_payload(payload));
  }
  state["images"] = std::move(images);
  json log = json::array();
  for (const auto& e : log_.entries()) {
    log.push_back({{"timestamp_ms", e.timestamp_ms},
                   {"kind", std::string(to_string(e.kind))},
                   {"payload", e.payload}});
  }
  state["log"] = std::move(log);
  json history = json::array();
  for (const auto& t : history_.turns()) {
    history.push_back({{"query", t.query}, {"answer", t.answer}});
  }
  state["history"] = std::move(history);
  write_text_file(dir / "state.json", state.dump(2));
}

std::unique_ptr<Session> Session::import_from(const std::filesystem::path& dir,
                                              std::shared_ptr<IdMinter> minter,
                                              std::unique_ptr<Clock> clock) {
  json state;
  try {
    state = json::parse(read_text_file(dir / "state.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, "corrupt session state in " + dir.string() + ": " + e.what());
  }
  auto session = std::make_unique<Session>(state.at("session_id").get<std::string>(),
                                           std::move(minter), std::move(clock));
  session->created_at_ms_ = state.value("created_at_ms", std::int64_t{0});
  for (const auto& r : state.at("images")) {
    ImageRecord rec;
    rec.self_id = r.at("self_id").get<std::string>();
    rec.link_id = r.at("link_id").get<std::string>();
    rec.role = ImageRole::from_token(r.at("role").get<std::string>());
    rec.filename = r.at("filename").get<std::string>();
    rec.width = r.at("width").get<int>();
    rec.height = r.at("height").get<int>();
    rec.fixture_key = r.value("fixture_key", std::string{});
    if (r.contains("crop_region")) {
      const auto& c = r["crop_region"];
      rec.crop_region = CropRegion{c.at("x").get<int>(), c.at("y").get<int>(),
                                   c.at("w").get<int>(), c.at("h").get<int>()};
    }
    auto payload = decode_payload(r.at("kind").get<std::string>(),
                                  read_file(dir / "images" / rec.filename));
    session->images_.restore(std::move(rec), std::move(payload));
  }
  for (const auto& e : state.at("log")) {
    session->log_.append(e.at("timestamp_ms").get<std::int64_t>(),
                         log_kind_from_string(e.at("kind").get<std::string>()),
                         e.at("payload").get<std::string>());
  }
  for (const auto& t : state.at("history")) {
    session->history_.append({t.at("query").get<std::string>(), t.at("answer").get<std::string>()});
  }
  return session;
}

}  // namespace changegpt
