#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "modforge/module_db.hpp"

namespace modforge {

struct ServiceOptions {
  std::optional<std::filesystem::path> snapshot_dir;  // session JSON persistence
  std::optional<std::filesystem::path> static_dir;    // composer UI assets
  std::size_t threads = 32;
  std::optional<std::string> generated_at;  // fixed manifest timestamp
};

/// The /v1 REST API over in-memory sessions. Requests to one session are
/// serialized; different sessions proceed in parallel.
class Service {
 public:
  Service(ModuleDatabase db, ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves until stop(). Returns false if the port is unavailable.
  bool listen(const std::string& host, int port);
  /// Binds to an ephemeral port and returns it (or -1); serve with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace modforge
