#include "mrnav/server.hpp"

#include <chrono>
#include <deque>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace mrnav {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

std::string_view mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

void split_lines(std::string& carry, std::string_view chunk, const std::function<void(std::string_view)>& on_line) {
  carry.append(chunk);
  std::size_t start = 0;
  for (std::size_t nl; (nl = carry.find('\n', start)) != std::string::npos; start = nl + 1) {
    std::string_view line(carry.data() + start, nl - start);
    if (!line.empty()) on_line(line);
  }
  carry.erase(0, start);
}

// Serialized writer living on a connection's io_context.
template <class SendFn>
struct Outbox {
  std::deque<std::string> queue;
  bool writing = false;
  SendFn send;

  void push(std::string line) {
    queue.push_back(std::move(line));
    kick();
  }
  void kick() {
    if (writing || queue.empty()) return;
    writing = true;
    send(queue.front(), [this](bool ok) {
      writing = false;
      if (!ok) {
        queue.clear();
        return;
      }
      queue.pop_front();
      kick();
    });
  }
};

// Drains the session's outbound queue into the io_context until the
// session closes, then runs `on_closed` there.
std::thread start_pump(asio::io_context& ioc, std::shared_ptr<Session> session,
                       std::function<void(std::string)> deliver, std::function<void()> on_closed) {
  return std::thread([&ioc, session, deliver = std::move(deliver), on_closed = std::move(on_closed)] {
    while (session->open()) {
      auto m = session->out().pop_wait(std::chrono::milliseconds(100));
      if (m) asio::post(ioc, [deliver, line = encode(*m)]() mutable { deliver(std::move(line)); });
    }
    asio::post(ioc, on_closed);
  });
}

}  // namespace

struct GatewayServer::Impl {
  struct Connection {
    std::shared_ptr<asio::io_context> ioc;
    std::shared_ptr<Session> session;
    std::thread thread;
    std::atomic<bool> finished{false};
  };

  MissionRunner& runner;
  ServerOptions options;
  asio::io_context listen_ioc;
  std::unique_ptr<tcp::acceptor> http_acceptor;
  std::unique_ptr<tcp::acceptor> tcp_acceptor;
  std::vector<std::thread> listeners;
  std::mutex mu;
  std::vector<std::unique_ptr<Connection>> connections;
  std::atomic<bool> stopping{false};

  Impl(MissionRunner& r, ServerOptions o) : runner(r), options(std::move(o)) {}

  std::unique_ptr<tcp::acceptor> bind(unsigned short port) {
    const tcp::endpoint ep(asio::ip::make_address(options.address), port);
    auto a = std::make_unique<tcp::acceptor>(listen_ioc);
    a->open(ep.protocol());
    a->set_option(asio::socket_base::reuse_address(true));
    a->bind(ep);
    a->listen();
    a->non_blocking(true);
    return a;
  }

  void reap() {
    std::lock_guard lk(mu);
    for (auto it = connections.begin(); it != connections.end();) {
      if ((*it)->finished) {
        (*it)->thread.join();
        it = connections.erase(it);
      } else {
        ++it;
      }
    }
  }

  void listen(tcp::acceptor& acceptor, bool raw) {
    while (!stopping) {
      auto ioc = std::make_shared<asio::io_context>();
      tcp::socket socket(*ioc);
      boost::system::error_code ec;
      acceptor.accept(socket, ec);
      if (ec == asio::error::would_block || ec == asio::error::try_again) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        continue;
      }
      if (ec) continue;
      socket.set_option(tcp::no_delay(true), ec);
      reap();
      auto conn = std::make_unique<Connection>();
      conn->ioc = ioc;
      Connection* c = conn.get();
      {
        std::lock_guard lk(mu);
        connections.push_back(std::move(conn));
      }
      c->thread = std::thread([this, c, raw, s = std::move(socket)]() mutable {
        try {
          if (raw) {
            serve_raw(*c, std::move(s));
          } else {
            serve_http(*c, std::move(s));
          }
        } catch (const std::exception&) {
        }
        if (c->session) runner.detach(c->session);
        c->finished = true;
      });
    }
  }

  std::shared_ptr<Session> attach(Connection& c) {
    std::lock_guard lk(mu);
    c.session = runner.attach();
    return c.session;
  }

  void serve_raw(Connection& c, tcp::socket socket) {
    asio::io_context& ioc = *c.ioc;
    auto session = attach(c);
    auto send = [&socket](const std::string& line, std::function<void(bool)> done) {
      asio::async_write(socket, asio::buffer(line), [done](boost::system::error_code ec, std::size_t) { done(!ec); });
    };
    Outbox<decltype(send)> outbox{{}, false, send};
    std::thread pump = start_pump(
        ioc, session, [&outbox](std::string line) { outbox.push(std::move(line)); },
        [&socket] {
          boost::system::error_code ec;
          socket.shutdown(tcp::socket::shutdown_both, ec);
          socket.close(ec);
        });

    std::array<char, 4096> chunk{};
    std::string carry;
    std::function<void()> read_more = [&] {
      socket.async_read_some(asio::buffer(chunk), [&](boost::system::error_code ec, std::size_t n) {
        if (ec) {
          session->close();
          return;
        }
        split_lines(carry, std::string_view(chunk.data(), n),
                    [&](std::string_view line) { runner.submit_line(session, line); });
        read_more();
      });
    };
    read_more();
    ioc.run();
    session->close();
    pump.join();
  }

  void serve_http(Connection& c, tcp::socket socket) {
    asio::io_context& ioc = *c.ioc;
    beast::flat_buffer buffer;
    http::request<http::string_body> req;
    bool upgrade = false;
    http::async_read(socket, buffer, req, [&](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (websocket::is_upgrade(req) && req.target() == "/ws") {
        upgrade = true;
        return;
      }
      auto res = std::make_shared<http::response<http::string_body>>(static_file(req));
      http::async_write(socket, *res, [&socket, res](beast::error_code, std::size_t) {
        beast::error_code ignored;
        socket.shutdown(tcp::socket::shutdown_both, ignored);
      });
    });
    ioc.run();
    if (!upgrade) return;
    ioc.restart();

    websocket::stream<tcp::socket> ws(std::move(socket));
    ws.text(true);
    bool accepted = false;
    ws.async_accept(req, [&](beast::error_code ec) { accepted = !ec; });
    ioc.run();
    if (!accepted) return;
    ioc.restart();

    auto session = attach(c);
    auto send = [&ws](const std::string& line, std::function<void(bool)> done) {
      ws.async_write(asio::buffer(line), [done](beast::error_code ec, std::size_t) { done(!ec); });
    };
    Outbox<decltype(send)> outbox{{}, false, send};
    std::thread pump = start_pump(
        ioc, session, [&outbox](std::string line) { outbox.push(std::move(line)); },
        [&ws] {
          beast::error_code ec;
          ws.next_layer().shutdown(tcp::socket::shutdown_both, ec);
          ws.next_layer().close(ec);
        });

    beast::flat_buffer in;
    std::string carry;
    std::function<void()> read_more = [&] {
      ws.async_read(in, [&](beast::error_code ec, std::size_t) {
        if (ec) {
          session->close();
          return;
        }
        std::string text = beast::buffers_to_string(in.data());
        in.consume(in.size());
        text.push_back('\n');
        split_lines(carry, text, [&](std::string_view line) { runner.submit_line(session, line); });
        read_more();
      });
    };
    read_more();
    ioc.run();
    session->close();
    pump.join();
  }

  http::response<http::string_body> static_file(const http::request<http::string_body>& req) const {
    http::response<http::string_body> res;
    res.version(req.version());
    res.keep_alive(false);
    res.set(http::field::server, "mrnav");
    const auto fail = [&](http::status s, std::string body) {
      res.result(s);
      res.set(http::field::content_type, "text/plain");
      res.body() = std::move(body);
      res.prepare_payload();
      return res;
    };
    if (req.method() != http::verb::get && req.method() != http::verb::head) {
      return fail(http::status::method_not_allowed, "GET only\n");
    }
    std::string target(req.target());
    if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (target.empty() || target.front() != '/' || target.find("..") != std::string::npos) {
      return fail(http::status::bad_request, "bad path\n");
    }
    if (target.back() == '/') target += "index.html";
    if (options.web_root.empty()) {
      if (target == "/index.html") {
        res.result(http::status::ok);
        res.set(http::field::content_type, "text/html");
        res.body() = "<!doctype html><title>mrnav</title><p>mrnav gateway: connect a client to /ws</p>\n";
        res.prepare_payload();
        return res;
      }
      return fail(http::status::not_found, "not found\n");
    }
    const std::filesystem::path file = options.web_root / target.substr(1);
    std::ifstream in(file, std::ios::binary);
    if (!in) return fail(http::status::not_found, "not found\n");
    std::ostringstream body;
    body << in.rdbuf();
    res.result(http::status::ok);
    res.set(http::field::content_type, std::string(mime_type(file)));
    res.body() = body.str();
    res.prepare_payload();
    if (req.method() == http::verb::head) res.body().clear();
    return res;
  }

  void stop() {
    stopping = true;
    for (auto& t : listeners) {
      if (t.joinable()) t.join();
    }
    listeners.clear();
    std::vector<std::unique_ptr<Connection>> conns;
    {
      std::lock_guard lk(mu);
      conns.swap(connections);
      for (auto& c : conns) {
        if (c->session) c->session->close();
        c->ioc->stop();
      }
    }
    for (auto& c : conns) {
      if (c->thread.joinable()) c->thread.join();
    }
    boost::system::error_code ec;
    if (http_acceptor) http_acceptor->close(ec);
    if (tcp_acceptor) tcp_acceptor->close(ec);
  }
};

GatewayServer::GatewayServer(MissionRunner& runner, ServerOptions options)
    : impl_(std::make_unique<Impl>(runner, std::move(options))) {}

GatewayServer::~GatewayServer() { stop(); }

void GatewayServer::start() {
  impl_->stopping = false;
  impl_->http_acceptor = impl_->bind(impl_->options.port);
  port_ = impl_->http_acceptor->local_endpoint().port();
  impl_->listeners.emplace_back([this] { impl_->listen(*impl_->http_acceptor, false); });
  if (impl_->options.tcp_port >= 0) {
    impl_->tcp_acceptor = impl_->bind(static_cast<unsigned short>(impl_->options.tcp_port));
    tcp_port_ = impl_->tcp_acceptor->local_endpoint().port();
    impl_->listeners.emplace_back([this] { impl_->listen(*impl_->tcp_acceptor, true); });
  }
}

void GatewayServer::stop() {
  if (impl_) impl_->stop();
}

}  // namespace mrnav
