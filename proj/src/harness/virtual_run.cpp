// SPDX-License-Identifier: Apache-2.0
//
// Deterministic discrete-event run. One queue, ordered by (time, insertion
// order); nothing reads a wall clock. True time drives scenes, links and the
// orchestrator; each participant converts it to its own skewed clock.
#include <cmath>
#include <memory>
#include <queue>

#include "holo/common/error.hpp"
#include "holo/harness/scenario.hpp"
#include "report_build.hpp"

namespace holo::harness {

namespace {

using client::Participant;
using wire::MsgType;
using wire::WireMessage;

constexpr std::uint64_t kEpochUs = 1'700'000'000'000'000ull;  // arbitrary, keeps timestamps realistic
constexpr std::uint64_t kTickUs = 1'000'000;
constexpr std::uint64_t kSettleUs = 100'000;  // between the last JOIN_ACK and the first capture slot

enum class Ev { UpSend, OrchArrive, DownArrive, CaptureDue, DecodeDone, Periodic, OrchTick };

struct Event {
  std::uint64_t t;
  std::uint64_t order;
  Ev kind;
  std::size_t client;
  orch::SharedBytes bytes;
  std::shared_ptr<const WireMessage> msg;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const noexcept {
    return a.t != b.t ? a.t > b.t : a.order > b.order;
  }
};

struct Client {
  Client(std::unique_ptr<Participant> participant, Link uplink, Link downlink)
      : p(std::move(participant)), up(std::move(uplink)), down(std::move(downlink)) {}

  std::unique_ptr<Participant> p;
  Link up;
  Link down;
  std::size_t group = 0;
  bool leader = false;
  bool capture_pending = false;
  std::uint64_t encoder_free = 0;  // also the whole worker when service.shared_worker
  std::vector<std::uint64_t> decoder_free;
  std::map<std::uint32_t, std::uint64_t> last_decode;  // per source, keeps completions in order
  std::uint64_t bytes_sent = 0;
  std::vector<Delivery> ingress;
  client::RenderSink final_sink;
};

class VirtualRun {
 public:
  explicit VirtualRun(const ResolvedScenario& rs)
      : rs_(rs), cfg_(rs.cfg), orch_(orch_config(rs.cfg)), period_us_(std::uint64_t(std::llround(1e6 / rs.cfg.fps))) {
    memo_ = std::make_shared<client::DecodeMemo>();
    const auto sizes = cfg_.session_sizes();
    group_session_.assign(sizes.size(), 0);
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
        const LinkModel lm = cfg_.link_for(id);
        Client c(std::make_unique<Participant>(pc), Link(lm, derive_seed(cfg_.seed, {0x11f0, id, 0})),
                 Link(lm, derive_seed(cfg_.seed, {0x11f0, id, 1})));
        c.p->set_decode_memo(memo_);
        c.group = g;
        c.leader = k == 0;
        c.decoder_free.assign(std::size_t(rs_.service.decoder_threads), 0);
        clients_.push_back(std::move(c));
      }
    }
    orch_.set_route_hook([this](const orch::RouteRecord& r) {
      if (r.type == MsgType::MediaPc) log_.routes.push_back(r);
    });
  }

  RunResult run() {
    for (std::size_t i = 0; i < clients_.size(); ++i) send_up(i, clients_[i].p->hello(kEpochUs), kEpochUs);
    push({kEpochUs + kTickUs, 0, Ev::OrchTick, 0, nullptr, nullptr});

    while (!queue_.empty()) {
      Event e = queue_.top();
      queue_.pop();
      now_ = e.t;
      dispatch(e);
      maybe_leave();
    }
    if (!media_started_) throw Error(Errc::ScenarioError, "media never started");

    std::vector<detail::ClientOutcome> outcomes;
    for (const auto& c : clients_) {
      const Participant& p = *c.p;
      detail::ClientOutcome o;
      o.member = p.id();
      o.session = group_session_[c.group];
      o.seat = final_seat_.count(p.id()) ? final_seat_.at(p.id()) : -1;
      o.offset_us = p.config().clock_offset_us;
      o.published = p.published();
      o.skipped = p.skipped();
      o.encode_errors = p.encode_errors();
      o.bytes_sent = c.bytes_sent;
      o.errors = p.errors().size();
      o.sink = c.final_sink;
      o.ingress = c.ingress;
      outcomes.push_back(std::move(o));
      log_.member_session[p.id()] = o.session;
    }
    RunResult out;
    out.report = detail::build_report(rs_, media_start_, media_end_, outcomes, orch_.sessions().relay_stats());
    out.log = std::move(log_);
    return out;
  }

 private:
  static orch::OrchestratorConfig orch_config(const ScenarioConfig& c) {
    orch::OrchestratorConfig oc;
    oc.max_members = orch::kMaxMembers;
    oc.heartbeat_timeout_ms = c.heartbeat_timeout_ms;
    return oc;
  }

  void push(Event e) {
    e.order = next_order_++;
    queue_.push(std::move(e));
  }

  void send_up(std::size_t i, const WireMessage& m, std::uint64_t at) {
    if (m.type == MsgType::MediaPc) {
      ++media_in_flight_;
      log_.published.push_back({at, m.sender_id, m.session_id, m.seq});
    }
    push({at, 0, Ev::UpSend, i, std::make_shared<const Bytes>(wire::encode_message(m)), nullptr});
  }

  static WireMessage decode(const Bytes& b) {
    const wire::DecodeResult r = wire::decode_message(b);
    if (r.status != wire::DecodeStatus::Ok || r.consumed != b.size())
      throw Error(Errc::ScenarioError, "internal framing error in virtual transport");
    return r.message;
  }

  void dispatch(const Event& e) {
    switch (e.kind) {
      case Ev::UpSend: {
        Client& c = clients_[e.client];
        if (MsgType((*e.bytes)[3]) == MsgType::MediaPc) c.bytes_sent += e.bytes->size();
        push({c.up.transfer(e.bytes->size(), now_), 0, Ev::OrchArrive, e.client, e.bytes, nullptr});
        return;
      }
      case Ev::OrchArrive: return on_orch_arrive(e);
      case Ev::DownArrive: return on_client_arrive(e);
      case Ev::DecodeDone: {
        Client& c = clients_[e.client];
        c.p->on_message(*e.msg, now_);
        --media_in_flight_;
        return;
      }
      case Ev::CaptureDue: return on_capture(e.client);
      case Ev::Periodic: {
        Client& c = clients_[e.client];
        if (leaving_ || c.p->state() != client::State::Joined) return;
        for (const auto& m : c.p->periodic(now_)) send_up(e.client, m, now_);
        push({now_ + kTickUs, 0, Ev::Periodic, e.client, nullptr, nullptr});
        return;
      }
      case Ev::OrchTick:
        deliver(orch_.tick(now_));
        if (!leaving_) push({now_ + kTickUs, 0, Ev::OrchTick, 0, nullptr, nullptr});
        return;
    }
  }

  void deliver(const std::vector<orch::Outbound>& outs) {
    for (const auto& o : outs) {
      const std::size_t j = std::size_t(o.conn - 1);
      push({clients_[j].down.transfer(o.bytes->size(), now_), 0, Ev::DownArrive, j, o.bytes, nullptr});
    }
  }

  void on_orch_arrive(const Event& e) {
    Client& c = clients_[e.client];
    const WireMessage m = decode(*e.bytes);
    const auto outs = orch_.on_message(orch::ConnId(e.client + 1), m, e.bytes, now_);
    if (m.type == MsgType::MediaPc) {
      c.ingress.push_back({now_, e.bytes->size()});
      --media_in_flight_;
      for (const auto& o : outs)
        if (o.bytes == e.bytes) ++media_in_flight_;
    }
    deliver(outs);
  }

  void on_client_arrive(const Event& e) {
    Client& c = clients_[e.client];
    Participant& p = *c.p;
    auto m = std::make_shared<const WireMessage>(decode(*e.bytes));

    if (m->type == MsgType::MediaPc) {
      log_.arrivals.push_back({now_, p.id(), m->sender_id, m->session_id, m->seq});
      if (p.state() != client::State::Joined) {
        --media_in_flight_;
        return;
      }
      // FIFO decoder pool; more remote sources cost more per frame.
      const std::size_t remote = p.remote_seats().size();
      const std::uint64_t service =
          rs_.service.decode_us + rs_.service.decode_load_us * (remote > 1 ? remote - 1 : 0);
      std::uint64_t* slot = rs_.service.shared_worker
                                ? &c.encoder_free
                                : &*std::min_element(c.decoder_free.begin(), c.decoder_free.end());
      const std::uint64_t start = std::max(now_, *slot);
      *slot = start + service;
      std::uint64_t& last = c.last_decode[m->sender_id];
      last = std::max(start + service, last);
      push({last, 0, Ev::DecodeDone, e.client, nullptr, std::move(m)});
      return;
    }

    p.on_message(*m, now_);
    const std::size_t g = c.group;
    switch (m->type) {
      case MsgType::HelloAck:
        if (c.leader) {
          send_up(e.client, p.create(std::uint8_t(cfg_.session_sizes()[g]), now_), now_);
        } else if (group_session_[g]) {
          send_up(e.client, p.join(group_session_[g], now_), now_);
        }
        return;
      case MsgType::CreateAck: {
        const auto sid = p.created_session();
        if (!sid) throw Error(Errc::ScenarioError, "member " + std::to_string(p.id()) + " could not create a session");
        group_session_[g] = *sid;
        // The invitation travels out of band: every ready member of the group joins now.
        for (std::size_t i = 0; i < clients_.size(); ++i)
          if (clients_[i].group == g && clients_[i].p->state() == client::State::Ready)
            send_up(i, clients_[i].p->join(*sid, now_), now_);
        return;
      }
      case MsgType::JoinAck:
        if (p.state() == client::State::Joined) {
          push({now_ + kTickUs, 0, Ev::Periodic, e.client, nullptr, nullptr});
          if (++joined_ == clients_.size()) start_media();
        }
        return;
      case MsgType::Error:
        if (p.state() == client::State::Failed || !media_started_) {
          const auto& errs = p.errors();
          throw Error(Errc::ScenarioError, "member " + std::to_string(p.id()) + " could not join: " +
                                               (errs.empty() ? std::string("unknown") : errs.back().text));
        }
        return;
      default:
        return;
    }
  }

  void start_media() {
    media_started_ = true;
    media_start_ = now_ + kSettleUs;
    media_end_ = media_start_ + std::uint64_t(std::llround(cfg_.duration_s * 1e6));
    const auto period = std::int64_t(period_us_);
    for (std::size_t i = 0; i < clients_.size(); ++i) {
      Client& c = clients_[i];
      // Capture clocks are not aligned across participants.
      SplitMix64 rng(derive_seed(cfg_.seed, {0xfa5e, c.p->id()}));
      c.p->start_media(media_start_ + (cfg_.aligned_capture ? 0 : std::uint64_t(rng.uniform_int(0, period - 1))));
      schedule_capture(i);
    }
  }

  void schedule_capture(std::size_t i) {
    Client& c = clients_[i];
    const std::uint64_t t = c.p->next_capture_us();
    c.capture_pending = t < media_end_;
    if (c.capture_pending) push({t, 0, Ev::CaptureDue, i, nullptr, nullptr});
  }

  void on_capture(std::size_t i) {
    Client& c = clients_[i];
    Participant& p = *c.p;
    if (!p.media_on()) {
      c.capture_pending = false;
      return;
    }
    // Shared worker: the tick waits for the worker and is dropped only once a
    // whole frame period behind. Otherwise capture is pipelined and the frame
    // is dropped if the encoder is still busy when it is ready.
    const bool shared = rs_.service.shared_worker;
    const std::uint64_t start = shared ? std::max(now_, c.encoder_free) : now_;
    const std::uint64_t ready = start + rs_.service.capture_us;
    const bool busy = shared ? start >= now_ + period_us_ : c.encoder_free > ready;
    if (busy) {
      p.skip_capture();  // keep the cadence rather than queue
    } else {
      const std::uint64_t sent = ready + rs_.service.encode_us;
      c.encoder_free = sent;
      if (auto m = p.capture_tick(now_, ready)) send_up(i, *m, sent);
    }
    schedule_capture(i);
  }

  void maybe_leave() {
    if (!media_started_ || leaving_ || now_ < media_end_ || media_in_flight_ != 0) return;
    for (const auto& c : clients_)
      if (c.capture_pending) return;
    leaving_ = true;
    for (std::size_t i = 0; i < clients_.size(); ++i) {
      Client& c = clients_[i];
      c.final_sink = c.p->sink();
      if (c.p->seat()) final_seat_[c.p->id()] = *c.p->seat();
      send_up(i, c.p->leave(now_), now_);
    }
  }

  const ResolvedScenario& rs_;
  const ScenarioConfig& cfg_;
  orch::Orchestrator orch_;
  std::uint64_t period_us_;
  std::shared_ptr<client::DecodeMemo> memo_;
  std::vector<Client> clients_;
  std::vector<std::uint32_t> group_session_;
  std::map<std::uint32_t, int> final_seat_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_order_ = 0;
  std::uint64_t now_ = kEpochUs;
  std::size_t joined_ = 0;
  bool media_started_ = false;
  bool leaving_ = false;
  std::uint64_t media_start_ = 0;
  std::uint64_t media_end_ = 0;
  std::int64_t media_in_flight_ = 0;
  EventLog log_;
};

}  // namespace

RunResult run_virtual(const ScenarioConfig& cfg) {
  const ResolvedScenario rs = resolve(cfg);
  if (rs.cfg.clock_mode != ClockMode::Virtual) throw Error(Errc::ConfigError, "run_virtual needs clock_mode virtual");
  VirtualRun run(rs);
  return run.run();
}

}  // namespace holo::harness
