#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mrnav/telemetry.hpp"

namespace mrnav {

struct ServerOptions {
  std::string address = "127.0.0.1";
  /// HTTP static files plus the browser socket at /ws. 0 picks a free port.
  unsigned short port = 8080;
  /// Raw newline-delimited TCP for headless clients. -1 disables it, 0 picks a free port.
  int tcp_port = -1;
  std::filesystem::path web_root;
};

/// Socket front end of a MissionRunner: one reader and one writer context
/// per connection, each connection attached as the active session.
class GatewayServer {
 public:
  GatewayServer(MissionRunner& runner, ServerOptions options);
  ~GatewayServer();
  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  /// Binds the listeners and starts accepting. Throws on bind failure.
  void start();
  void stop();

  unsigned short port() const noexcept { return port_; }
  int tcp_port() const noexcept { return tcp_port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  unsigned short port_ = 0;
  int tcp_port_ = -1;
};

}  // namespace mrnav
