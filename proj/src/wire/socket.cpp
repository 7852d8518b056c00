// SPDX-License-Identifier: Apache-2.0
#include "holo/wire/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "holo/common/error.hpp"

namespace holo::wire {
namespace {

[[noreturn]] void fail(const std::string& what) {
  throw Error(Errc::IoError, what + ": " + std::strerror(errno));
}

}  // namespace

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = o.release();
  }
  return *this;
}

Socket::~Socket() { close(); }

int Socket::release() noexcept {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::close() noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Socket listen_tcp(const std::string& bind_addr, std::uint16_t port, int backlog) {
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s.valid()) fail("socket");
  const int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_addr.c_str(), &addr.sin_addr) != 1)
    throw Error(Errc::ConfigError, "invalid bind address '" + bind_addr + "'");
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) fail("bind " + bind_addr + ":" + std::to_string(port));
  if (::listen(s.fd(), backlog) != 0) fail("listen");
  return s;
}

std::uint16_t local_port(const Socket& s) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) fail("getsockname");
  return ntohs(addr.sin_port);
}

Socket connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0)
    throw Error(Errc::IoError, "resolve " + host + ": " + ::gai_strerror(rc));
  Socket s;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket attempt(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (attempt.valid() && ::connect(attempt.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      s = std::move(attempt);
      break;
    }
  }
  ::freeaddrinfo(res);
  if (!s.valid()) fail("connect " + host + ":" + std::to_string(port));
  set_nodelay(s);
  return s;
}

void set_nonblocking(const Socket& s) {
  const int flags = ::fcntl(s.fd(), F_GETFL, 0);
  if (flags < 0 || ::fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK) != 0) fail("fcntl");
}

void set_nodelay(const Socket& s) {
  const int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

void send_all(const Socket& s, ByteView bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(s.fd(), bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("send");
    }
    sent += std::size_t(n);
  }
}

std::optional<WireMessage> recv_message(const Socket& s, FrameDecoder& decoder) {
  std::uint8_t buf[64 * 1024];
  for (;;) {
    if (auto m = decoder.next()) return m;
    const ssize_t n = ::recv(s.fd(), buf, sizeof buf, 0);
    if (n == 0) return std::nullopt;
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("recv");
    }
    decoder.feed(ByteView(buf, std::size_t(n)));
  }
}

}  // namespace holo::wire
