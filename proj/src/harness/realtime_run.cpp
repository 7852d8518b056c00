// SPDX-License-Identifier: Apache-2.0
//
// Wall-clock run over real sockets. Each participant is a thread with its
// own socket; the orchestrator is either an in-process TcpServer or an
// external endpoint. No link emulation here: loopback is the network. Metrics
// are gathered only after every thread has joined.
#include <poll.h>
#include <sys/socket.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "holo/common/error.hpp"
#include "holo/harness/scenario.hpp"
#include "holo/orchestrator/server.hpp"
#include "holo/wire/socket.hpp"
#include "report_build.hpp"

namespace holo::harness {

namespace {

using client::Participant;
using wire::MsgType;
using wire::WireMessage;

constexpr std::uint64_t kSignalingTimeoutUs = 10'000'000;
constexpr std::uint64_t kMediaLeadUs = 300'000;
constexpr std::uint64_t kDrainUs = 500'000;

struct Shared {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::uint32_t> group_session;
  std::size_t joined = 0;
  std::size_t total = 0;
  std::optional<std::uint64_t> media_start;
  std::string failure;
};

struct Slot {
  std::unique_ptr<Participant> p;
  std::shared_ptr<client::DecodeMemo> memo;
  std::size_t group = 0;
  bool leader = false;
  std::uint64_t bytes_sent = 0;
  std::vector<Delivery> sent_log;
  client::RenderSink final_sink;
  int seat = -1;
};

class Connection {
 public:
  Connection(const std::string& host, std::uint16_t port) : sock_(wire::connect_tcp(host, port)) {
    wire::set_nodelay(sock_);
  }

  std::size_t send(const WireMessage& m) {
    const Bytes b = wire::encode_message(m);
    wire::send_all(sock_, b);
    return b.size();
  }

  /// Next message, waiting at most until `deadline_us` (wall clock).
  std::optional<WireMessage> recv_until(std::uint64_t deadline_us) {
    for (;;) {
      if (auto m = dec_.next()) return m;
      const std::uint64_t now = orch::wall_clock_us();
      if (now >= deadline_us) return std::nullopt;
      pollfd pfd{sock_.fd(), POLLIN, 0};
      const int ms = int(std::min<std::uint64_t>((deadline_us - now + 999) / 1000, 1000));
      const int r = ::poll(&pfd, 1, ms);
      if (r < 0 && errno != EINTR) throw Error(Errc::IoError, "poll failed");
      if (r <= 0) continue;
      std::uint8_t buf[64 * 1024];
      const ssize_t n = ::recv(sock_.fd(), buf, sizeof buf, 0);
      if (n == 0) throw Error(Errc::IoError, "orchestrator closed the connection");
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(Errc::IoError, "recv failed");
      }
      dec_.feed(ByteView(buf, std::size_t(n)));
    }
  }

  void close() { sock_.shutdown(); sock_.close(); }

 private:
  wire::Socket sock_;
  wire::FrameDecoder dec_;
};

class RealtimeRun {
 public:
  explicit RealtimeRun(const ResolvedScenario& rs) : rs_(rs), cfg_(rs.cfg) {
    const auto sizes = cfg_.session_sizes();
    shared_.group_session.assign(sizes.size(), 0);
    std::uint32_t id = 1;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
      for (int k = 0; k < sizes[g]; ++k, ++id) {
        client::ParticipantConfig pc;
        pc.member_id = id;
        pc.scene = cfg_.scene;
        pc.scene.seed = derive_seed(cfg_.seed, {0x5ce4e, id});
        pc.cam = capture::default_camera(pc.scene);
        pc.codec = cfg_.codec;
        pc.fps = cfg_.fps;
        pc.clock_offset_us = cfg_.clock_offsets_us.empty()
                                 ? client::draw_clock_offset(cfg_.seed, id, cfg_.clock_offset_bound_us)
                                 : cfg_.clock_offsets_us[id - 1];
        Slot s;
        s.p = std::make_unique<Participant>(pc);
        // Per-thread memo: the harness decodes first so the render stamp lands after decode.
        s.memo = std::make_shared<client::DecodeMemo>();
        s.p->set_decode_memo(s.memo);
        s.group = g;
        s.leader = k == 0;
        slots_.push_back(std::move(s));
      }
    }
    shared_.total = slots_.size();
  }

  RunResult run() {
    std::string host = cfg_.orchestrator_host;
    std::uint16_t port = cfg_.orchestrator_port;
    std::unique_ptr<orch::Orchestrator> orch;
    std::unique_ptr<orch::TcpServer> server;
    std::atomic<bool> stop{false};
    std::thread server_thread;
    std::map<std::uint32_t, std::vector<Delivery>> ingress;  // written by the server thread only

    if (host.empty()) {
      orch::OrchestratorConfig oc;
      oc.heartbeat_timeout_ms = cfg_.heartbeat_timeout_ms;
      orch = std::make_unique<orch::Orchestrator>(oc);
      orch->set_route_hook([&ingress](const orch::RouteRecord& r) {
        if (r.type == MsgType::MediaPc) ingress[r.sender_id].push_back({r.at_us, r.bytes});
      });
      server = std::make_unique<orch::TcpServer>(*orch, "127.0.0.1", port);
      host = "127.0.0.1";
      port = server->port();
      server_thread = std::thread([&] { server->run(stop); });
    }

    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < slots_.size(); ++i) threads.emplace_back([this, i, &host, port] { client_main(i, host, port); });
    for (auto& t : threads) t.join();
    // Let the relay flush its last rosters before stopping.
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    stop = true;
    if (server_thread.joinable()) server_thread.join();

    if (!shared_.failure.empty()) throw Error(Errc::ScenarioError, shared_.failure);

    std::vector<detail::ClientOutcome> outcomes;
    RunResult out;
    for (auto& s : slots_) {
      const Participant& p = *s.p;
      detail::ClientOutcome o;
      o.member = p.id();
      o.session = shared_.group_session[s.group];
      o.seat = s.seat;
      o.offset_us = p.config().clock_offset_us;
      o.published = p.published();
      o.skipped = p.skipped();
      o.encode_errors = p.encode_errors();
      o.bytes_sent = s.bytes_sent;
      o.errors = p.errors().size();
      o.sink = s.final_sink;
      // Without an in-process relay the client's own send log stands in for ingress.
      o.ingress = orch ? ingress[p.id()] : s.sent_log;
      out.log.member_session[p.id()] = o.session;
      outcomes.push_back(std::move(o));
    }
    const orch::RelayStats relay = orch ? orch->sessions().relay_stats() : orch::RelayStats{};
    out.report = detail::build_report(rs_, *shared_.media_start, *shared_.media_start + duration_us(), outcomes, relay);
    return out;
  }

 private:
  std::uint64_t duration_us() const { return std::uint64_t(std::llround(cfg_.duration_s * 1e6)); }

  void fail(const std::string& why) {
    std::lock_guard lock(shared_.mu);
    if (shared_.failure.empty()) shared_.failure = why;
    shared_.cv.notify_all();
  }

  // Waits for a specific signaling reply, handling anything else on the way.
  WireMessage expect(Connection& c, Participant& p, MsgType type, std::uint64_t deadline) {
    for (;;) {
      auto m = c.recv_until(deadline);
      if (!m) throw Error(Errc::ScenarioError, "member " + std::to_string(p.id()) + " timed out waiting for " +
                                                   std::string(wire::type_name(type)));
      p.on_message(*m, orch::wall_clock_us());
      if (m->type == type) return *m;
      if (m->type == MsgType::Error)
        throw Error(Errc::ScenarioError, "member " + std::to_string(p.id()) + " could not join: " +
                                             (p.errors().empty() ? std::string("unknown") : p.errors().back().text));
    }
  }

  void handle(Slot& s, const WireMessage& m) {
    if (m.type == MsgType::MediaPc) {
      try {
        const auto enc = codec::parse_encoded_frame(m.payload);
        const auto pts = codec::decode_frame(enc).size();
        s.memo->store(m.sender_id, m.seq, m.payload, pts);
      } catch (const Error&) {
        // The participant repeats the decode and records the failure.
      }
    }
    s.p->on_message(m, orch::wall_clock_us());
  }

  void client_main(std::size_t i, const std::string& host, std::uint16_t port) {
    Slot& s = slots_[i];
    Participant& p = *s.p;
    try {
      Connection c(host, port);
      const std::uint64_t deadline = orch::wall_clock_us() + kSignalingTimeoutUs;
      c.send(p.hello(orch::wall_clock_us()));
      expect(c, p, MsgType::HelloAck, deadline);

      std::uint32_t sid = 0;
      if (s.leader) {
        c.send(p.create(std::uint8_t(cfg_.session_sizes()[s.group]), orch::wall_clock_us()));
        expect(c, p, MsgType::CreateAck, deadline);
        sid = p.created_session().value_or(0);
        std::lock_guard lock(shared_.mu);
        shared_.group_session[s.group] = sid;
        shared_.cv.notify_all();
      } else {
        std::unique_lock lock(shared_.mu);
        shared_.cv.wait_until(lock, std::chrono::steady_clock::now() + std::chrono::microseconds(kSignalingTimeoutUs),
                              [&] { return shared_.group_session[s.group] != 0 || !shared_.failure.empty(); });
        sid = shared_.group_session[s.group];
      }
      if (sid == 0) throw Error(Errc::ScenarioError, "member " + std::to_string(p.id()) + " got no session id");
      c.send(p.join(sid, orch::wall_clock_us()));
      expect(c, p, MsgType::JoinAck, deadline);
      if (p.state() != client::State::Joined) throw Error(Errc::ScenarioError, "join refused");

      std::uint64_t media_start = 0;
      {
        std::unique_lock lock(shared_.mu);
        if (++shared_.joined == shared_.total) {
          shared_.media_start = orch::wall_clock_us() + kMediaLeadUs;
          shared_.cv.notify_all();
        }
        // Rosters arriving meanwhile stay buffered in the decoder.
        shared_.cv.wait_until(lock, std::chrono::steady_clock::now() + std::chrono::microseconds(kSignalingTimeoutUs),
                              [&] { return shared_.media_start.has_value() || !shared_.failure.empty(); });
        if (!shared_.media_start) throw Error(Errc::ScenarioError, "not every member joined in time");
        media_start = *shared_.media_start;
      }

      const auto period = std::int64_t(std::llround(1e6 / cfg_.fps));
      SplitMix64 rng(derive_seed(cfg_.seed, {0xfa5e, p.id()}));
      p.start_media(media_start + (cfg_.aligned_capture ? 0 : std::uint64_t(rng.uniform_int(0, period - 1))));
      const std::uint64_t media_end = media_start + duration_us();

      for (;;) {
        const std::uint64_t now = orch::wall_clock_us();
        if (now >= media_end + kDrainUs) break;
        for (const auto& m : p.periodic(now)) c.send(m);
        if (p.media_on() && now >= p.next_capture_us()) {
          if (now >= media_end) {
            p.stop_media();
          } else if (auto m = p.capture_tick(now, now)) {
            const std::size_t n = c.send(*m);
            s.bytes_sent += n;
            s.sent_log.push_back({orch::wall_clock_us(), n});
          }
        }
        std::uint64_t wake = media_end + kDrainUs;
        if (p.media_on()) wake = std::min(wake, p.next_capture_us());
        wake = std::min(wake, now + 100'000);
        if (auto m = c.recv_until(wake)) handle(s, *m);
      }
      s.final_sink = p.sink();
      if (p.seat()) s.seat = *p.seat();
      c.send(p.leave(orch::wall_clock_us()));
      c.close();
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }

  const ResolvedScenario& rs_;
  const ScenarioConfig& cfg_;
  std::vector<Slot> slots_;
  Shared shared_;
};

}  // namespace

RunResult run_realtime(const ScenarioConfig& cfg) {
  const ResolvedScenario rs = resolve(cfg);
  if (rs.cfg.clock_mode != ClockMode::Realtime) throw Error(Errc::ConfigError, "run_realtime needs clock_mode realtime");
  RealtimeRun run(rs);
  return run.run();
}

}  // namespace holo::harness
