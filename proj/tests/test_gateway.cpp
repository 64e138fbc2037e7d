#include <gtest/gtest.h>

#include <httplib.h>

#include <future>
#include <thread>

#include "changegpt/agent.hpp"
#include "changegpt/gateway.hpp"
#include "changegpt/png_io.hpp"
#include "test_paths.hpp"

using namespace changegpt;
using nlohmann::json;

namespace {

const std::string kWhetherStep =
    "Thought: Do I need to use a tool? Yes\nAction: whether_change\nAction Input: pre=pre, cur=cur";
const std::string kFinalYes = "Thought: Do I need to use a tool? No\nFinal Answer: Yes, it changed.";
const std::string kFinalTwo = "Thought: Do I need to use a tool? No\nFinal Answer: Second answer.";

ToolRegistry fixture_registry() {
  ToolkitConfig cfg;
  cfg.fixtures_dir = testpaths::fixtures() / "tools";
  return make_default_registry(cfg);
}

std::string file_body(const std::string& name) {
  const auto bytes = read_file(testpaths::fixtures() / "images" / name);
  return {bytes.begin(), bytes.end()};
}

/// A gateway on an ephemeral port, served from a background thread.
class Running {
 public:
  Running(const ToolRegistry& reg, const BackendFactory& backends, GatewayConfig cfg = {})
      : gw_(reg, backends, std::move(cfg)) {
    port_ = gw_.bind_any_port("127.0.0.1");
    thread_ = std::thread([this] { gw_.listen_after_bind(); });
    gw_.server().wait_until_ready();
  }
  ~Running() {
    gw_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10);
    return c;
  }
  Gateway& gateway() { return gw_; }

 private:
  Gateway gw_;
  int port_ = 0;
  std::thread thread_;
};

BackendFactory scripted(const json& scripts, const std::string& name) {
  const auto path = testpaths::scratch("gw_" + name) / "scripts.json";
  write_text_file(path, scripts.dump());
  return BackendFactory(BackendSelector::parse("scripted:" + path.string()));
}

std::string new_session(httplib::Client& c) {
  auto r = c.Post("/sessions");
  EXPECT_EQ(r->status, 201);
  return json::parse(r->body).at("session_id");
}

json upload(httplib::Client& c, const std::string& sid, const std::string& role, const std::string& png,
            const std::string& extra = "") {
  auto r = c.Post("/sessions/" + sid + "/images?role=" + role + extra, png, "image/png");
  EXPECT_TRUE(r);
  json j = json::parse(r->body);
  j["_status"] = r->status;
  return j;
}

}  // namespace

TEST(Gateway, EndToEndQueryAndHistory) {
  const auto reg = fixture_registry();
  const auto backends = scripted({{"default", {kWhetherStep, kFinalYes, kFinalTwo}}}, "e2e");
  Running srv(reg, backends);
  auto c = srv.client();
  const auto sid = new_session(c);

  const auto pre = upload(c, sid, "pre", file_body("3f9a01_pre.png"), "&pair_id=3f9a01");
  EXPECT_EQ(pre["_status"], 201);
  EXPECT_EQ(pre.at("role"), "pre");
  EXPECT_EQ(pre.at("link_id"), "3f9a01");
  EXPECT_EQ(pre.at("width"), 64);
  const auto cur = upload(c, sid, "cur", file_body("3f9a01_cur.png"));
  EXPECT_EQ(cur["_status"], 201);
  EXPECT_EQ(cur.at("link_id"), "3f9a01");

  auto r = c.Post("/sessions/" + sid + "/query", json{{"question", "Did it change?"}}.dump(), "application/json");
  ASSERT_EQ(r->status, 200);
  const auto out = json::parse(r->body);
  EXPECT_EQ(out.at("answer"), "Yes, it changed.");
  EXPECT_EQ(out.at("tools_used"), json::array({"whether_change"}));
  EXPECT_EQ(out.at("trace").at("steps").size(), 2u);

  r = c.Post("/sessions/" + sid + "/query", R"({"question": "And now?"})", "application/json");
  ASSERT_EQ(r->status, 200);
  r = c.Get("/sessions/" + sid + "/history");
  ASSERT_EQ(r->status, 200);
  const auto hist = json::parse(r->body);
  ASSERT_EQ(hist.at("turns").size(), 2u);
  EXPECT_EQ(hist.at("turns")[0].at("query"), "Did it change?");
  EXPECT_EQ(hist.at("turns")[1].at("answer"), "Second answer.");

  r = c.Get("/sessions/" + sid);
  EXPECT_EQ(json::parse(r->body).at("image_count"), 2);
  r = c.Get("/sessions/" + sid + "/log");
  EXPECT_GT(json::parse(r->body).at("entries").size(), 4u);
  r = c.Get("/tools");
  EXPECT_EQ(r->status, 200);
}

TEST(Gateway, ImagesCropAndErrors) {
  const auto reg = fixture_registry();
  const auto backends = scripted({{"default", {kFinalYes}}}, "errors");
  Running srv(reg, backends);
  auto c = srv.client();
  const auto sid = new_session(c);
  const auto pre = upload(c, sid, "pre", file_body("3f9a01_pre.png"));
  const std::string pre_id = pre.at("self_id");

  // Image fetch by id, globally and per session.
  auto r = c.Get("/images/" + pre_id);
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(decode_rgb({reinterpret_cast<const std::uint8_t*>(r->body.data()), r->body.size()}),
            decode_rgb(read_file(testpaths::fixtures() / "images/3f9a01_pre.png")));
  EXPECT_EQ(c.Get("/sessions/" + sid + "/images/" + pre.at("filename").get<std::string>())->status, 200);
  EXPECT_EQ(c.Get("/images/abcdef")->status, 404);

  // Crop.
  r = c.Post("/sessions/" + sid + "/crop", json{{"parent_id", pre_id}, {"x", 8}, {"y", 8}, {"w", 16}, {"h", 16}}.dump(),
             "application/json");
  ASSERT_EQ(r->status, 201);
  const auto crop = json::parse(r->body);
  EXPECT_EQ(crop.at("role"), "crppre");
  EXPECT_EQ(crop.at("crop_region"), json({{"x", 8}, {"y", 8}, {"w", 16}, {"h", 16}}));
  r = c.Post("/sessions/" + sid + "/crop", json{{"parent_id", pre_id}, {"x", 0}, {"y", 0}, {"w", -4}, {"h", 4}}.dump(),
             "application/json");
  EXPECT_EQ(r->status, 400);
  r = c.Post("/sessions/" + sid + "/crop", json{{"parent_id", pre_id}, {"x", 60}, {"y", 0}, {"w", 8}, {"h", 4}}.dump(),
             "application/json");
  EXPECT_EQ(r->status, 400);
  r = c.Post("/sessions/" + sid + "/crop", R"({"parent_id": "abcdef", "x": 0, "y": 0, "w": 1, "h": 1})", "application/json");
  EXPECT_EQ(r->status, 404);
  r = c.Post("/sessions/" + sid + "/crop", "not json", "application/json");
  EXPECT_EQ(r->status, 400);

  // Uploads.
  EXPECT_EQ(upload(c, sid, "cur", file_body("3f9a01_cur.png").substr(0, 10) + "junk")["_status"], 400);
  EXPECT_EQ(upload(c, sid, "side", file_body("3f9a01_cur.png"))["_status"], 400);
  EXPECT_EQ(upload(c, sid, "cur", "GIF89a")["_status"], 400);
  auto big = file_body("3f9a01_cur.png");
  big.resize(kMaxUploadBytes + 1, '\0');
  r = c.Post("/sessions/" + sid + "/images?role=cur", big, "image/png");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 413);
  const auto small = encode_rgb(RgbImage(8, 8, std::vector<std::uint8_t>(8 * 8 * 3, 7)));
  EXPECT_EQ(upload(c, sid, "cur", std::string(small.begin(), small.end()))["_status"], 409);

  // Unknown sessions and bad queries.
  EXPECT_EQ(c.Get("/sessions/000000/history")->status, 404);
  EXPECT_EQ(c.Post("/sessions/000000/query", R"({"question": "q"})", "application/json")->status, 404);
  EXPECT_EQ(c.Post("/sessions/" + sid + "/query", R"({"question": ""})", "application/json")->status, 400);
  EXPECT_EQ(c.Post("/sessions/" + sid + "/query", R"({"q": "x"})", "application/json")->status, 400);
}

TEST(Gateway, BackendFailureIs502WithPartialTrace) {
  const auto reg = fixture_registry();
  const auto backends = scripted({{"default", {kWhetherStep}}}, "502");
  Running srv(reg, backends);
  auto c = srv.client();
  const auto sid = new_session(c);
  upload(c, sid, "pre", file_body("3f9a01_pre.png"));
  upload(c, sid, "cur", file_body("3f9a01_cur.png"));
  auto r = c.Post("/sessions/" + sid + "/query", R"({"question": "changed?"})", "application/json");
  ASSERT_EQ(r->status, 502);
  const auto out = json::parse(r->body);
  EXPECT_EQ(out.at("status"), "backend_error");
  EXPECT_EQ(out.at("trace").at("steps").size(), 1u);
  EXPECT_FALSE(out.at("error").get<std::string>().empty());
}

TEST(Gateway, BusySessionGets409) {
  // A slow completion service keeps the first query in flight.
  httplib::Server llm;
  std::promise<void> entered;
  std::atomic<bool> signalled{false};
  llm.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (!signalled.exchange(true)) entered.set_value();
    std::this_thread::sleep_for(std::chrono::milliseconds(800));
    json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", kFinalYes}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int llm_port = llm.bind_to_any_port("127.0.0.1");
  std::thread llm_thread([&] { llm.listen_after_bind(); });
  llm.wait_until_ready();

  HttpBackendConfig http;
  http.base_url = "http://127.0.0.1:" + std::to_string(llm_port) + "/v1";
  http.model = "mock";
  const auto reg = fixture_registry();
  const BackendFactory backends(BackendSelector::parse("http"), http);
  {
    Running srv(reg, backends);
    auto c = srv.client();
    const auto sid = new_session(c);
    const auto other = new_session(c);
    auto first = std::async(std::launch::async, [&] {
      auto c1 = srv.client();
      return c1.Post("/sessions/" + sid + "/query", R"({"question": "slow"})", "application/json")->status;
    });
    entered.get_future().wait();
    EXPECT_EQ(c.Post("/sessions/" + sid + "/query", R"({"question": "again"})", "application/json")->status, 409);
    // Another session is not blocked.
    EXPECT_EQ(c.Post("/sessions/" + other + "/query", R"({"question": "other"})", "application/json")->status, 200);
    EXPECT_EQ(first.get(), 200);
    EXPECT_EQ(c.Post("/sessions/" + sid + "/query", R"({"question": "after"})", "application/json")->status, 200);
  }
  llm.stop();
  llm_thread.join();
}

TEST(Gateway, PersistedStoreReplaysHistory) {
  const auto reg = fixture_registry();
  const auto backends = scripted({{"default", {kFinalYes, kFinalTwo}}}, "persist");
  const auto store = testpaths::scratch("gw_store");
  GatewayConfig cfg;
  cfg.store_dir = store;
  std::string sid;
  std::string history;
  std::string log;
  {
    Running srv(reg, backends, cfg);
    auto c = srv.client();
    sid = new_session(c);
    upload(c, sid, "pre", file_body("7c2e45_pre.png"));
    c.Post("/sessions/" + sid + "/query", R"({"question": "one"})", "application/json");
    c.Post("/sessions/" + sid + "/query", R"({"question": "two"})", "application/json");
    history = c.Get("/sessions/" + sid + "/history")->body;
    log = c.Get("/sessions/" + sid + "/log")->body;
  }
  Running again(reg, backends, cfg);
  EXPECT_EQ(again.gateway().session_count(), 1u);
  auto c = again.client();
  EXPECT_EQ(c.Get("/sessions/" + sid + "/history")->body, history);
  EXPECT_EQ(c.Get("/sessions/" + sid + "/log")->body, log);
  EXPECT_EQ(json::parse(c.Get("/sessions/" + sid)->body).at("image_count"), 1);
}

TEST(Gateway, DeterministicModeMatchesDirectRun) {
  const auto reg = fixture_registry();
  const auto dataset = load_dataset(testpaths::fixtures() / "dataset.jsonl");
  const auto& q = dataset.front();
  ASSERT_EQ(q.id, "whether-01");
  const auto script = ScriptedBackend::parse_script(json::parse(read_text_file(testpaths::fixtures() / "scripts/whether-01.json")));

  ScriptedBackend direct_backend(script);
  const auto direct = run_question(q, reg, direct_backend);

  const auto backends = scripted({{"default", script}}, "determinism");
  GatewayConfig cfg;
  cfg.deterministic = true;
  Running srv(reg, backends, cfg);
  auto c = srv.client();
  const auto sid = new_session(c);
  upload(c, sid, "pre", file_body("3f9a01_pre.png"), "&pair_id=3f9a01");
  upload(c, sid, "cur", file_body("3f9a01_cur.png"));
  auto r = c.Post("/sessions/" + sid + "/query", json{{"question", q.text}}.dump(), "application/json");
  ASSERT_EQ(r->status, 200);
  const auto out = json::parse(r->body);
  EXPECT_EQ(out.at("answer"), direct.answer);
  EXPECT_EQ(out.at("trace"), direct.trace);
}
