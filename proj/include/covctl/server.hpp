#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>

#include "covctl/session.hpp"

namespace covctl {

struct ServerOptions {
  /// 0 picks an ephemeral port.
  std::uint16_t port = 8700;
  /// Simulated seconds per wall-clock second.
  double realtime_factor = 1.0;
  /// Outgoing messages buffered per client before the oldest is dropped.
  std::size_t client_buffer = 16;
  SessionOptions session;
};

/// WebSocket front end of a live Session on the `/session` endpoint. One
/// simulation thread owns the session; client I/O runs on a separate worker.
class Server {
 public:
  Server(ScenarioFile scenario, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts the simulation and I/O threads. Throws std::system_error
  /// when the port is taken.
  void start();
  /// Blocks until stop() is called from another thread.
  void wait();
  void stop();

  std::uint16_t port() const;
  /// Simulation ticks completed so far.
  std::uint64_t ticks() const;
  std::size_t clients() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace covctl
