#pragma once

// WebSocket front end for a LiveSession. One server hosts one session; every
// connection speaks the JSON wire protocol, one message per frame.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <boost/asio/io_context.hpp>

#include "pace/session.hpp"

namespace pace::server {

struct ServerOptions {
  std::string address = "0.0.0.0";
  unsigned short port = 8765;  // 0 picks a free port
  std::optional<std::filesystem::path> log_dir;  // <session_id>.jsonl lands here
  std::function<void(unsigned short port)> on_listen;  // serve_forever only
};

class Server {
 public:
  Server(boost::asio::io_context& ioc, session::SessionConfig cfg, ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;
  void start();

  // Closes the listener and all connections and writes session_end. Must run
  // on the io_context thread (post it from elsewhere).
  void stop();

  const session::LiveSession& live() const;

  class Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

// Blocks until SIGINT/SIGTERM, then finishes the session log.
void serve_forever(session::SessionConfig cfg, const ServerOptions& options);

}  // namespace pace::server
