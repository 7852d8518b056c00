// SPDX-License-Identifier: Apache-2.0
//
// Thin RAII wrappers over POSIX TCP sockets. Errors surface as IoError.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "holo/common/bytes.hpp"
#include "holo/wire/wire.hpp"

namespace holo::wire {

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.release()) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept;
  void close() noexcept;
  void shutdown() noexcept;  // wakes a thread blocked in recv

 private:
  int fd_ = -1;
};

/// Listening socket on `bind_addr:port` (port 0 picks an ephemeral port).
Socket listen_tcp(const std::string& bind_addr, std::uint16_t port, int backlog = 16);
std::uint16_t local_port(const Socket& s);
Socket connect_tcp(const std::string& host, std::uint16_t port);
void set_nonblocking(const Socket& s);
void set_nodelay(const Socket& s);

/// Blocking helpers for simple clients.
void send_all(const Socket& s, ByteView bytes);

/// Blocks until one whole frame is available. Returns nullopt on orderly
/// close; throws IoError on socket errors.
std::optional<WireMessage> recv_message(const Socket& s, FrameDecoder& decoder);

}  // namespace holo::wire
