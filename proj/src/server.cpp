#include "pace/server.hpp"

#include <deque>
#include <fstream>
#include <set>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

namespace pace::server {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

class Connection;

class Server::Impl : public std::enable_shared_from_this<Server::Impl> {
 public:
  Impl(asio::io_context& ioc, session::SessionConfig cfg, ServerOptions options);

  void start();
  void stop();
  void accept();
  void deliver(Connection& from, std::string_view text);
  void drop(const std::shared_ptr<Connection>& conn);

  asio::io_context& ioc_;
  tcp::acceptor acceptor_;
  std::ofstream log_file_;
  session::LiveSession live_;
  std::set<std::shared_ptr<Connection>> connections_;
  bool stopped_ = false;

 private:
  static session::LiveSession::Sink make_sink(std::ofstream& file) {
    return [&file](const SessionEvent& e) {
      if (file.is_open()) file << event_to_line(e) << '\n' << std::flush;
    };
  }
};

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, std::weak_ptr<Server::Impl> server)
      : ws_(std::move(socket)), server_(std::move(server)) {}

  void start() {
    ws_.text(true);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->fail(ec, "handshake");
      self->read();
    });
  }

  void send(std::string text) {
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
  }

  void close() {
    beast::error_code ignored;
    ws_.next_layer().shutdown(tcp::socket::shutdown_both, ignored);
    ws_.next_layer().close(ignored);
  }

  session::Peer peer;

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->fail(ec, "read");
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      if (auto server = self->server_.lock()) server->deliver(*self, text);
      self->read();
    });
  }

  void write() {
    ws_.async_write(asio::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return self->fail(ec, "write");
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->write();
                    });
  }

  void fail(beast::error_code ec, const char* what) {
    if (ec != websocket::error::closed && ec != asio::error::operation_aborted) {
      spdlog::debug("connection {}: {}", what, ec.message());
    }
    if (auto server = server_.lock()) server->drop(shared_from_this());
  }

  websocket::stream<tcp::socket> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::weak_ptr<Server::Impl> server_;
};

namespace {

std::ofstream open_log(const session::SessionConfig& cfg, const ServerOptions& options) {
  std::ofstream file;
  if (!options.log_dir) return file;
  std::filesystem::create_directories(*options.log_dir);
  const auto path = *options.log_dir / (cfg.session_id + ".jsonl");
  file.open(path, std::ios::app);
  if (!file) throw Error(ErrorCode::io, "cannot open session log " + path.string());
  return file;
}

}  // namespace

Server::Impl::Impl(asio::io_context& ioc, session::SessionConfig cfg, ServerOptions options)
    : ioc_(ioc),
      acceptor_(ioc),
      log_file_(open_log(cfg, options)),
      live_(cfg, {}, make_sink(log_file_)) {
  const tcp::endpoint endpoint(asio::ip::make_address(options.address), options.port);
  acceptor_.open(endpoint.protocol());
  acceptor_.set_option(asio::socket_base::reuse_address(true));
  acceptor_.bind(endpoint);
  acceptor_.listen();
}

void Server::Impl::start() { accept(); }

void Server::Impl::accept() {
  acceptor_.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (!self->stopped_) spdlog::warn("accept: {}", ec.message());
      return;
    }
    auto conn = std::make_shared<Connection>(std::move(socket), self);
    self->connections_.insert(conn);
    conn->start();
    self->accept();
  });
}

void Server::Impl::deliver(Connection& from, std::string_view text) {
  const auto replies = live_.handle_message(text, from.peer);
  for (const auto& out : replies) {
    const std::string wire = out.message.dump();
    if (out.target == session::Outbound::Target::sender) {
      from.send(wire);
      continue;
    }
    for (const auto& conn : connections_) {
      if (conn->peer.role == "player") conn->send(wire);
    }
  }
}

void Server::Impl::drop(const std::shared_ptr<Connection>& conn) { connections_.erase(conn); }

void Server::Impl::stop() {
  if (stopped_) return;
  stopped_ = true;
  beast::error_code ignored;
  acceptor_.close(ignored);
  for (const auto& conn : connections_) conn->close();
  connections_.clear();
  live_.finish();
}

Server::Server(asio::io_context& ioc, session::SessionConfig cfg, ServerOptions options)
    : impl_(std::make_shared<Impl>(ioc, std::move(cfg), std::move(options))) {}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor_.local_endpoint().port(); }

void Server::start() { impl_->start(); }

void Server::stop() { impl_->stop(); }

const session::LiveSession& Server::live() const { return impl_->live_; }

void serve_forever(session::SessionConfig cfg, const ServerOptions& options) {
  asio::io_context ioc(1);
  Server server(ioc, std::move(cfg), options);
  server.start();
  spdlog::info("listening on {}:{}", options.address, server.port());
  if (options.on_listen) options.on_listen(server.port());
  asio::signal_set signals(ioc, SIGINT, SIGTERM);
  signals.async_wait([&](beast::error_code, int) {
    server.stop();
    ioc.stop();
  });
  ioc.run();
}

}  // namespace pace::server
