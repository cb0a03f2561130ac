#include "covctl/server.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

namespace covctl {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Message = std::shared_ptr<const std::string>;

namespace {

class Client;

/// Registry shared by the acceptor, the clients and the simulation thread.
struct Hub {
  Session* session = nullptr;
  std::size_t buffer = 16;
  mutable std::mutex mutex;
  std::set<std::shared_ptr<Client>> clients;

  void add(const std::shared_ptr<Client>& c) {
    std::lock_guard lock(mutex);
    clients.insert(c);
  }
  void remove(const std::shared_ptr<Client>& c) {
    std::lock_guard lock(mutex);
    clients.erase(c);
  }
  void broadcast(const Message& msg);
};

class Client : public std::enable_shared_from_this<Client> {
 public:
  Client(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void start() {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     beast::bind_front_handler(&Client::on_request, shared_from_this()));
  }

  /// Thread-safe; drops the oldest pending message when the buffer is full.
  void send(Message msg) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), msg = std::move(msg)]() mutable {
      self->pending_.push_back(std::move(msg));
      while (self->pending_.size() > self->hub_.buffer) self->pending_.pop_front();
      if (!self->writing_) self->write_next();
    });
  }

  /// Only once the I/O thread has stopped.
  void close() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void on_request(beast::error_code ec, std::size_t) {
    if (ec) return;
    if (!websocket::is_upgrade(request_) || request_.target() != "/session") {
      auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found,
                                                                     request_.version());
      res->set(http::field::content_type, "text/plain");
      res->body() = "websocket endpoint is /session\n";
      res->prepare_payload();
      http::async_write(ws_.next_layer(), *res,
                        [self = shared_from_this(), res](beast::error_code, std::size_t) {
                          beast::error_code ignored;
                          self->ws_.next_layer().socket().shutdown(tcp::socket::shutdown_send, ignored);
                        });
      return;
    }
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request_, beast::bind_front_handler(&Client::on_accept, shared_from_this()));
  }

  void on_accept(beast::error_code ec) {
    if (ec) return;
    ws_.text(true);
    hub_.add(shared_from_this());
    read_next();
  }

  void read_next() {
    ws_.async_read(incoming_, beast::bind_front_handler(&Client::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      hub_.remove(shared_from_this());
      return;
    }
    const std::string text = beast::buffers_to_string(incoming_.data());
    incoming_.consume(incoming_.size());
    if (auto err = hub_.session->submit(text)) {
      send(std::make_shared<const std::string>(err->dump()));
    }
    read_next();
  }

  void write_next() {
    if (pending_.empty()) {
      writing_ = false;
      return;
    }
    writing_ = true;
    inflight_ = std::move(pending_.front());
    pending_.pop_front();
    ws_.async_write(asio::buffer(*inflight_),
                    beast::bind_front_handler(&Client::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    inflight_.reset();
    if (ec) {
      writing_ = false;
      hub_.remove(shared_from_this());
      return;
    }
    write_next();
  }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  beast::flat_buffer buffer_;
  beast::flat_buffer incoming_;
  http::request<http::string_body> request_;
  std::deque<Message> pending_;
  Message inflight_;
  bool writing_ = false;
};

void Hub::broadcast(const Message& msg) {
  std::lock_guard lock(mutex);
  for (const auto& c : clients) c->send(msg);
}

}  // namespace

struct Server::Impl {
  Impl(ScenarioFile scenario, ServerOptions opts)
      : options(opts), session(std::move(scenario), opts.session), acceptor(io) {
    hub.session = &session;
    hub.buffer = std::max<std::size_t>(1, opts.client_buffer);
  }

  void accept() {
    acceptor.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Client>(std::move(socket), hub)->start();
      accept();
    });
  }

  void simulate() {
    using clock = std::chrono::steady_clock;
    const auto interval = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(session.scenario().config.dt / options.realtime_factor));
    auto next = clock::now();
    std::unique_lock lock(stop_mutex);
    while (!stopping) {
      for (auto& msg : session.tick()) hub.broadcast(std::make_shared<const std::string>(msg.dump()));
      ticks.fetch_add(1, std::memory_order_relaxed);
      next += interval;
      const auto now = clock::now();
      if (next < now) next = now;
      stop_cv.wait_until(lock, next, [this] { return stopping; });
    }
  }

  ServerOptions options;
  Session session;
  Hub hub;
  asio::io_context io;
  tcp::acceptor acceptor;
  std::thread io_thread;
  std::thread sim_thread;
  std::atomic<std::uint64_t> ticks{0};
  std::mutex stop_mutex;
  std::condition_variable stop_cv;
  bool stopping = false;
  bool started = false;
};

Server::Server(ScenarioFile scenario, ServerOptions options) {
  if (!(options.realtime_factor > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "realtime factor must be positive");
  }
  impl_ = std::make_unique<Impl>(std::move(scenario), options);
}

Server::~Server() { stop(); }

void Server::start() {
  auto& m = *impl_;
  const tcp::endpoint endpoint(asio::ip::address_v4::any(), m.options.port);
  m.acceptor.open(endpoint.protocol());
  m.acceptor.set_option(asio::socket_base::reuse_address(true));
  m.acceptor.bind(endpoint);
  m.acceptor.listen(asio::socket_base::max_listen_connections);
  m.accept();
  m.started = true;
  m.io_thread = std::thread([&m] { m.io.run(); });
  m.sim_thread = std::thread([&m] { m.simulate(); });
}

void Server::wait() {
  auto& m = *impl_;
  std::unique_lock lock(m.stop_mutex);
  m.stop_cv.wait(lock, [&m] { return m.stopping; });
}

void Server::stop() {
  if (!impl_) return;
  auto& m = *impl_;
  {
    std::lock_guard lock(m.stop_mutex);
    if (m.stopping && !m.started) return;
    m.stopping = true;
  }
  m.stop_cv.notify_all();
  if (m.sim_thread.joinable()) m.sim_thread.join();
  m.io.stop();
  if (m.io_thread.joinable()) m.io_thread.join();
  beast::error_code ec;
  m.acceptor.close(ec);
  {
    std::lock_guard lock(m.hub.mutex);
    for (const auto& c : m.hub.clients) c->close();
    m.hub.clients.clear();
  }
  m.started = false;
}

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

std::uint64_t Server::ticks() const { return impl_->ticks.load(std::memory_order_relaxed); }

std::size_t Server::clients() const {
  std::lock_guard lock(impl_->hub.mutex);
  return impl_->hub.clients.size();
}

}  // namespace covctl
