// SPDX-License-Identifier: Apache-2.0
#include "holo/orchestrator/server.hpp"

#include <poll.h>
#include <sys/socket.h>

#include <cerrno>
#include <chrono>
#include <vector>

#include "holo/common/error.hpp"

namespace holo::orch {

std::uint64_t wall_clock_us() {
  using namespace std::chrono;
  return std::uint64_t(duration_cast<microseconds>(system_clock::now().time_since_epoch()).count());
}

TcpServer::TcpServer(Orchestrator& orch, const std::string& bind_addr, std::uint16_t port,
                     std::function<std::uint64_t()> clock)
    : orch_(orch), listener_(wire::listen_tcp(bind_addr, port)), clock_(std::move(clock)) {
  wire::set_nonblocking(listener_);
  port_ = wire::local_port(listener_);
}

void TcpServer::run(const std::atomic<bool>& stop) {
  while (!stop.load(std::memory_order_relaxed)) poll_once(50);
  const std::uint64_t now = clock_();
  orch_.log_stats_snapshot(now);
}

void TcpServer::poll_once(int timeout_ms) {
  std::vector<pollfd> fds;
  std::vector<ConnId> ids;
  fds.push_back({listener_.fd(), POLLIN, 0});
  for (auto& [id, c] : conns_) {
    fds.push_back({c.sock.fd(), short(POLLIN | (c.outq.empty() ? 0 : POLLOUT)), 0});
    ids.push_back(id);
  }
  const int n = ::poll(fds.data(), fds.size(), timeout_ms);
  if (n < 0 && errno != EINTR) throw Error(Errc::IoError, "poll failed");

  if (n > 0) {
    if (fds[0].revents & POLLIN) accept_all();
    for (std::size_t i = 1; i < fds.size(); ++i) {
      const ConnId id = ids[i - 1];
      auto it = conns_.find(id);
      if (it == conns_.end()) continue;  // closed while dispatching
      const short ev = fds[i].revents;
      bool alive = true;
      if (ev & (POLLIN | POLLHUP | POLLERR)) alive = read_from(id, it->second);
      it = conns_.find(id);
      if (alive && it != conns_.end() && (ev & POLLOUT)) alive = flush(it->second);
      if (!alive) close_conn(id);
    }
  }

  const std::uint64_t now = clock_();
  dispatch(orch_.tick(now));
  if (now - last_snapshot_us_ >= 10'000'000) {
    orch_.log_stats_snapshot(now);
    last_snapshot_us_ = now;
  }
}

void TcpServer::accept_all() {
  for (;;) {
    const int fd = ::accept(listener_.fd(), nullptr, nullptr);
    if (fd < 0) return;  // EAGAIN or transient failure
    wire::Socket s(fd);
    wire::set_nonblocking(s);
    wire::set_nodelay(s);
    conns_.emplace(next_conn_++, Conn{std::move(s), {}, {}, 0, 0});
  }
}

bool TcpServer::read_from(ConnId id, Conn& c) {
  std::uint8_t buf[64 * 1024];
  for (;;) {
    const ssize_t n = ::recv(c.sock.fd(), buf, sizeof buf, 0);
    if (n == 0) return false;
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) break;
      return false;
    }
    c.decoder.feed(ByteView(buf, std::size_t(n)));
    if (std::size_t(n) < sizeof buf) break;
  }
  const std::uint64_t now = clock_();
  while (auto msg = c.decoder.next()) {
    auto raw = std::make_shared<const Bytes>(wire::encode_message(*msg));
    dispatch(orch_.on_message(id, *msg, std::move(raw), now));
    if (!conns_.count(id)) return false;
  }
  return true;
}

bool TcpServer::flush(Conn& c) {
  while (!c.outq.empty()) {
    const Bytes& front = *c.outq.front();
    const ssize_t n =
        ::send(c.sock.fd(), front.data() + c.head_offset, front.size() - c.head_offset, MSG_NOSIGNAL | MSG_DONTWAIT);
    if (n < 0) {
      if (errno == EINTR) continue;
      return errno == EAGAIN || errno == EWOULDBLOCK;
    }
    c.head_offset += std::size_t(n);
    c.backlog -= std::size_t(n);
    if (c.head_offset == front.size()) {
      c.outq.pop_front();
      c.head_offset = 0;
    }
  }
  return true;
}

void TcpServer::dispatch(std::vector<Outbound> out) {
  std::vector<ConnId> overloaded;
  for (auto& o : out) {
    auto it = conns_.find(o.conn);
    if (it == conns_.end()) {
      // Recipient vanished between routing and delivery.
      const auto d = wire::decode_message(*o.bytes);
      if (d.status == wire::DecodeStatus::Ok && d.message.sender_id != 0)
        orch_.note_drop(d.message.session_id, d.message.sender_id);
      continue;
    }
    Conn& c = it->second;
    c.backlog += o.bytes->size();
    c.outq.push_back(std::move(o.bytes));
    if (!flush(c) || c.backlog > kMaxBacklogBytes) overloaded.push_back(o.conn);
  }
  for (ConnId id : overloaded) close_conn(id);
}

void TcpServer::close_conn(ConnId id) {
  auto it = conns_.find(id);
  if (it == conns_.end()) return;
  conns_.erase(it);
  dispatch(orch_.on_disconnect(id, clock_()));
}

}  // namespace holo::orch
