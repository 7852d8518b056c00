// SPDX-License-Identifier: Apache-2.0
//
// Single-threaded poll(2) event loop hosting an Orchestrator over TCP.
#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>

#include "holo/orchestrator/orchestrator.hpp"
#include "holo/wire/socket.hpp"

namespace holo::orch {

/// Microseconds since the Unix epoch from the system clock.
std::uint64_t wall_clock_us();

class TcpServer {
 public:
  /// Binds immediately so that port() is valid before run().
  TcpServer(Orchestrator& orch, const std::string& bind_addr, std::uint16_t port,
            std::function<std::uint64_t()> clock = wall_clock_us);

  std::uint16_t port() const noexcept { return port_; }

  /// Serves until `stop` becomes true. Liveness sweeps run every loop turn.
  void run(const std::atomic<bool>& stop);

  /// One poll/dispatch round; exposed for tests.
  void poll_once(int timeout_ms);

  std::size_t connection_count() const noexcept { return conns_.size(); }

  /// A connection whose unsent backlog exceeds this is closed.
  static constexpr std::size_t kMaxBacklogBytes = std::size_t{256} << 20;

 private:
  struct Conn {
    wire::Socket sock;
    wire::FrameDecoder decoder;
    std::deque<SharedBytes> outq;
    std::size_t head_offset = 0;  // bytes of outq.front() already written
    std::size_t backlog = 0;
  };

  void accept_all();
  bool read_from(ConnId id, Conn& c);   // false: connection closed
  bool flush(Conn& c);                  // false: write error
  void dispatch(std::vector<Outbound> out);
  void close_conn(ConnId id);

  Orchestrator& orch_;
  wire::Socket listener_;
  std::uint16_t port_ = 0;
  std::function<std::uint64_t()> clock_;
  std::map<ConnId, Conn> conns_;
  ConnId next_conn_ = 1;
  std::uint64_t last_snapshot_us_ = 0;
};

}  // namespace holo::orch
