#include "changegpt/gateway.hpp"

#include <atomic>

#include <httplib.h>

#include "changegpt/error.hpp"
#include "changegpt/png_io.hpp"

namespace changegpt {

using nlohmann::json;

json image_record_to_json(const ImageRecord& rec) {
  json j = {{"self_id", rec.self_id},   {"link_id", rec.link_id}, {"role", rec.role.token()},
            {"filename", rec.filename}, {"width", rec.width},     {"height", rec.height},
            {"url", "/images/" + rec.self_id}};
  if (rec.crop_region) {
    const auto& c = *rec.crop_region;
    j["crop_region"] = {{"x", c.x}, {"y", c.y}, {"w", c.w}, {"h", c.h}};
  } else {
    j["crop_region"] = nullptr;
  }
  return j;
}

json history_to_json(const DialogueHistory& history) {
  json turns = json::array();
  for (const auto& t : history.turns()) turns.push_back({{"query", t.query}, {"answer", t.answer}});
  return {{"version", 1}, {"turns", turns}};
}

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, std::string_view message) {
  send_json(res, status, {{"error", message}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownImage:
    case ErrorCode::UnknownParent:
      return 404;
    case ErrorCode::DimensionMismatch:
      return 409;
    case ErrorCode::OutOfBounds:
    case ErrorCode::BadInput:
    case ErrorCode::BadImage:
    case ErrorCode::BadClass:
      return 400;
    default:
      return 500;
  }
}

bool looks_like_png(const std::string& body) {
  static constexpr unsigned char kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return body.size() >= 8 && std::equal(kSig, kSig + 8, reinterpret_cast<const unsigned char*>(body.data()));
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) {
      send_error(res, 400, "request body must be a JSON object");
      return std::nullopt;
    }
    return j;
  } catch (const json::parse_error& e) {
    send_error(res, 400, std::string("malformed JSON: ") + e.what());
    return std::nullopt;
  }
}

}  // namespace

Gateway::Gateway(const ToolRegistry& registry, const BackendFactory& backends, GatewayConfig config)
    : registry_(registry),
      backends_(backends),
      config_(std::move(config)),
      minter_(std::make_shared<IdMinter>(std::random_device{}() ^
                                         (static_cast<std::uint64_t>(std::random_device{}()) << 32))),
      server_(std::make_unique<httplib::Server>()) {
  if (config_.store_dir) restore();
  install_routes();
}

Gateway::~Gateway() { stop(); }

bool Gateway::listen(const std::string& host, int port) { return server_->listen(host, port); }
int Gateway::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }
bool Gateway::listen_after_bind() { return server_->listen_after_bind(); }
void Gateway::stop() {
  if (server_) server_->stop();
}

std::size_t Gateway::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::shared_ptr<Gateway::Slot> Gateway::slot(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<Gateway::Slot> Gateway::create_slot() {
  auto s = std::make_shared<Slot>();
  const auto id = minter_->mint();
  if (config_.deterministic) {
    s->session = make_replay_session(id);
  } else {
    s->session = std::make_unique<Session>(id, minter_, std::make_unique<SystemClock>());
  }
  s->backend = backends_.create(id);
  {
    std::lock_guard lock(mutex_);
    sessions_[id] = s;
  }
  persist(*s);
  return s;
}

void Gateway::persist(const Slot& s) const {
  if (!config_.store_dir) return;
  const auto dir = *config_.store_dir / s.session->id();
  const auto tmp = *config_.store_dir / (s.session->id() + ".tmp");
  std::filesystem::remove_all(tmp);
  s.session->export_to(tmp);
  std::filesystem::remove_all(dir);
  std::filesystem::rename(tmp, dir);
}

void Gateway::restore() {
  const auto& root = *config_.store_dir;
  std::filesystem::create_directories(root);
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (!entry.is_directory() || !std::filesystem::exists(entry.path() / "state.json")) continue;
    const auto id = entry.path().filename().string();
    if (!is_hex_id(id)) continue;
    minter_->reserve(id);
    auto s = std::make_shared<Slot>();
    if (config_.deterministic) {
      s->session = Session::import_from(entry.path(), std::make_shared<IdMinter>(),
                                        std::make_unique<LogicalClock>());
    } else {
      s->session = Session::import_from(entry.path(), minter_, std::make_unique<SystemClock>());
    }
    s->backend = backends_.create(id);
    sessions_[id] = std::move(s);
  }
}

void Gateway::install_routes() {
  auto& srv = *server_;
  srv.set_payload_max_length(kMaxUploadBytes);
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    } catch (...) {
      send_error(res, 500, "internal error");
    }
  });
  if (config_.static_dir) srv.set_mount_point("/", config_.static_dir->string());

  srv.Post("/sessions", [this](const httplib::Request&, httplib::Response& res) {
    auto s = create_slot();
    send_json(res, 201, {{"session_id", s->session->id()},
                         {"created_at", s->session->created_at_ms()},
                         {"image_count", 0}});
  });

  srv.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    std::lock_guard lock(mutex_);
    for (const auto& [id, s] : sessions_) out.push_back(id);
    send_json(res, 200, {{"sessions", out}});
  });

  srv.Get(R"(/sessions/([0-9a-f]{6}))", [this](const httplib::Request& req, httplib::Response& res) {
    auto s = slot(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    std::lock_guard lock(s->state);
    json images = json::array();
    for (const auto& id : s->session->images().order()) {
      images.push_back(image_record_to_json(s->session->images().get(id)));
    }
    send_json(res, 200, {{"session_id", s->session->id()},
                         {"created_at", s->session->created_at_ms()},
                         {"image_count", s->session->images().size()},
                         {"images", images},
                         {"busy", s->running.load()}});
  });

  srv.Post(R"(/sessions/([0-9a-f]{6})/images)", [this](const httplib::Request& req, httplib::Response& res) {
    auto s = slot(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    const auto role = req.get_param_value("role");
    if (role != "pre" && role != "cur") return send_error(res, 400, "role must be 'pre' or 'cur'");
    if (!looks_like_png(req.body)) return send_error(res, 400, "body must be a PNG image");
    std::optional<std::string> pair_id;
    if (req.has_param("pair_id")) pair_id = req.get_param_value("pair_id");
    std::lock_guard lock(s->state);
    if (s->running) return send_error(res, 409, "session busy");
    const auto* data = reinterpret_cast<const std::uint8_t*>(req.body.data());
    const auto& rec = s->session->register_image(std::span(data, req.body.size()),
                                                 role == "pre" ? RoleKind::Pre : RoleKind::Cur, pair_id);
    const auto body = image_record_to_json(rec);
    persist(*s);
    send_json(res, 201, body);
  });

  srv.Post(R"(/sessions/([0-9a-f]{6})/crop)", [this](const httplib::Request& req, httplib::Response& res) {
    auto s = slot(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    auto body = parse_body(req, res);
    if (!body) return;
    CropRegion region;
    std::string parent;
    try {
      parent = body->at("parent_id").get<std::string>();
      region = {body->at("x").get<int>(), body->at("y").get<int>(), body->at("w").get<int>(),
                body->at("h").get<int>()};
    } catch (const json::exception& e) {
      return send_error(res, 400, std::string("crop needs parent_id, x, y, w, h: ") + e.what());
    }
    std::lock_guard lock(s->state);
    if (s->running) return send_error(res, 409, "session busy");
    const auto& rec = s->session->crop_and_register(parent, region);
    const auto out = image_record_to_json(rec);
    persist(*s);
    send_json(res, 201, out);
  });

  srv.Post(R"(/sessions/([0-9a-f]{6})/query)", [this](const httplib::Request& req, httplib::Response& res) {
    auto s = slot(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    auto body = parse_body(req, res);
    if (!body) return;
    if (!body->contains("question") || !(*body)["question"].is_string() ||
        (*body)["question"].get<std::string>().empty()) {
      return send_error(res, 400, "body needs a non-empty 'question' string");
    }
    if (s->running.exchange(true)) return send_error(res, 409, "session busy");
    struct Release {
      std::atomic<bool>& flag;
      ~Release() { flag = false; }
    } release{s->running};

    std::lock_guard lock(s->state);
    const auto outcome = run_query(*s->session, (*body)["question"].get<std::string>(), *s->backend,
                                   registry_, config_.agent);
    persist(*s);
    json out = {{"answer", outcome.answer},
                {"status", std::string(to_string(outcome.trace.status))},
                {"tools_used", outcome.trace.tools_used()},
                {"trace", trace_to_json(outcome.trace)}};
    if (outcome.trace.status == QueryStatus::BackendError) {
      out["error"] = outcome.trace.error;
      return send_json(res, 502, out);
    }
    send_json(res, 200, out);
  });

  srv.Get(R"(/sessions/([0-9a-f]{6})/history)", [this](const httplib::Request& req, httplib::Response& res) {
    auto s = slot(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    std::lock_guard lock(s->state);
    send_json(res, 200, history_to_json(s->session->history()));
  });

  srv.Get(R"(/sessions/([0-9a-f]{6})/log)", [this](const httplib::Request& req, httplib::Response& res) {
    auto s = slot(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    std::lock_guard lock(s->state);
    json entries = json::array();
    for (const auto& e : s->session->log().entries()) {
      entries.push_back({{"timestamp_ms", e.timestamp_ms},
                         {"kind", std::string(to_string(e.kind))},
                         {"payload", e.payload}});
    }
    send_json(res, 200, {{"version", 1}, {"entries", entries}});
  });

  auto send_png = [](const Session& session, const std::string& ref, httplib::Response& res) {
    const auto* rec = session.images().find(ref);
    if (rec == nullptr) return false;
    const auto png = encode_payload(session.images().payload(rec->self_id));
    res.status = 200;
    res.set_content(std::string(png.begin(), png.end()), "image/png");
    return true;
  };

  srv.Get(R"(/sessions/([0-9a-f]{6})/images/([0-9a-z_.]+))",
          [this, send_png](const httplib::Request& req, httplib::Response& res) {
            auto s = slot(req.matches[1]);
            if (!s) return send_error(res, 404, "unknown session");
            std::lock_guard lock(s->state);
            if (!send_png(*s->session, req.matches[2], res)) send_error(res, 404, "unknown image");
          });

  srv.Get(R"(/images/([0-9a-f]{6}[0-9a-z_.]*))", [this, send_png](const httplib::Request& req, httplib::Response& res) {
    const std::string ref = req.matches[1];
    std::vector<std::shared_ptr<Slot>> all;
    {
      std::lock_guard lock(mutex_);
      for (const auto& [id, s] : sessions_) all.push_back(s);
    }
    for (const auto& s : all) {
      std::lock_guard lock(s->state);
      if (send_png(*s->session, ref, res)) return;
    }
    send_error(res, 404, "unknown image");
  });

  srv.Get("/tools", [this](const httplib::Request&, httplib::Response& res) {
    json tools = json::array();
    for (const auto* t : registry_.list()) {
      tools.push_back({{"name", t->name},
                       {"description", t->description},
                       {"arguments", t->arg_grammar},
                       {"backing", std::string(to_string(t->backing.kind))}});
    }
    send_json(res, 200, {{"tools", tools}});
  });
}

}  // namespace changegpt
