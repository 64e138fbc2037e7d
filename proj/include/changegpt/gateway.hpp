#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "changegpt/agent.hpp"

namespace httplib {
class Server;
}

namespace changegpt {

inline constexpr std::size_t kMaxUploadBytes = 32u * 1024u * 1024u;

struct GatewayConfig {
  AgentConfig agent;
  /// When set, every session is exported here after each change and all
  /// sessions found here are restored at startup.
  std::optional<std::filesystem::path> store_dir;
  /// Per-session id minter and logical clock, so a session replays exactly
  /// like the CLI. Image ids are then unique only within a session.
  bool deterministic = false;
  /// Optional directory of static assets served at "/".
  std::optional<std::filesystem::path> static_dir;
};

/// Session store plus HTTP routes. Queries on different sessions may run
/// concurrently; a second query on a busy session gets 409.
class Gateway {
 public:
  Gateway(const ToolRegistry& registry, const BackendFactory& backends, GatewayConfig config = {});
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  httplib::Server& server() { return *server_; }

  /// Blocks until stop(). Returns false if the socket could not be bound.
  bool listen(const std::string& host, int port);
  /// Binds to an ephemeral port and returns it (-1 on failure); call
  /// listen_after_bind() on another thread afterwards.
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();

  [[nodiscard]] std::size_t session_count() const;

 private:
  struct Slot {
    std::unique_ptr<Session> session;
    std::unique_ptr<CompletionBackend> backend;
    std::mutex state;               // guards session and backend
    std::atomic<bool> running{false};  // a query is in flight
  };

  void install_routes();
  std::shared_ptr<Slot> slot(const std::string& id) const;
  std::shared_ptr<Slot> create_slot();
  void persist(const Slot& slot) const;
  void restore();

  const ToolRegistry& registry_;
  const BackendFactory& backends_;
  GatewayConfig config_;
  std::shared_ptr<IdMinter> minter_;
  std::unique_ptr<httplib::Server> server_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

nlohmann::json image_record_to_json(const ImageRecord& rec);
nlohmann::json history_to_json(const DialogueHistory& history);

}  // namespace changegpt
