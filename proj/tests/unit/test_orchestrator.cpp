// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <atomic>
#include <map>
#include <set>
#include <thread>

#include "holo/common/error.hpp"
#include "holo/orchestrator/orchestrator.hpp"
#include "holo/orchestrator/server.hpp"
#include "holo/wire/socket.hpp"

using namespace holo;
using namespace holo::orch;
using holo::wire::MsgType;
using holo::wire::WireMessage;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::IoError;
}

}  // namespace

TEST_CASE("create_session") {
  SessionManager sm;
  const auto a = sm.create_session(4, 0);
  const auto b = sm.create_session(4, 0);
  CHECK(a != 0);
  CHECK(a != b);
  CHECK(code_of([&] { sm.create_session(1, 0); }) == Errc::ConfigError);
  CHECK(code_of([&] { sm.create_session(7, 0); }) == Errc::ConfigError);
}

TEST_CASE("join seating and limits") {
  SessionManager sm;
  const auto s4 = sm.create_session(4, 0);
  for (std::uint32_t m = 1; m <= 3; ++m) CHECK(sm.join(s4, m, m, 0).seat == m - 1);
  const auto r = sm.join(s4, 4, 4, 0);
  CHECK(r.seat == 3);
  CHECK(r.roster.size() == 4);
  CHECK(code_of([&] { sm.join(s4, 5, 5, 0); }) == Errc::SessionFull);
  CHECK(code_of([&] { sm.join(s4, 2, 2, 0); }) == Errc::AlreadyJoined);
  CHECK(code_of([&] { sm.join(999, 1, 1, 0); }) == Errc::NoSuchSession);

  const auto s6 = sm.create_session(6, 0);
  for (std::uint32_t m = 10; m < 16; ++m) sm.join(s6, m, m, 0);
  CHECK(code_of([&] { sm.join(s6, 16, 16, 0); }) == Errc::SessionFull);
}

TEST_CASE("leave frees seats and destroys empty sessions") {
  SessionManager sm;
  const auto s = sm.create_session(6, 0);
  sm.join(s, 1, 1, 0);
  sm.join(s, 2, 2, 0);
  sm.join(s, 3, 3, 0);
  CHECK_FALSE(sm.leave(s, 2));
  CHECK(sm.join(s, 4, 4, 0).seat == 1);
  CHECK(code_of([&] { sm.leave(s, 2); }) == Errc::NotAMember);
  sm.leave(s, 1);
  sm.leave(s, 3);
  CHECK(sm.leave(s, 4));
  CHECK(sm.find(s) == nullptr);
  CHECK(code_of([&] { sm.join(s, 1, 1, 0); }) == Errc::NoSuchSession);
  CHECK(code_of([&] { sm.leave(s, 1); }) == Errc::NoSuchSession);
}

TEST_CASE("route_media fan-out and stats") {
  SessionManager sm;
  const auto s = sm.create_session(6, 0);
  for (std::uint32_t m = 1; m <= 4; ++m) sm.join(s, m, m, 0);
  const auto to = sm.route_media(s, 2, 0, 1000);
  CHECK(to == std::vector<std::uint32_t>{1, 3, 4});
  sm.route_media(s, 2, 1, 500);
  const auto& st = sm.relay_stats().at({s, 2});
  CHECK(st.frames_in == 2);
  CHECK(st.frames_out == 6);
  CHECK(st.bytes_in == 1500);
  CHECK(st.bytes_out == 4500);
  CHECK(*sm.get(s).members.at(2).media_seq_high == 1);
  CHECK(code_of([&] { sm.route_media(s, 9, 0, 1); }) == Errc::NotAMember);
  CHECK(code_of([&] { sm.route_media(s + 1, 1, 0, 1); }) == Errc::NoSuchSession);

  const auto pair = sm.create_session(2, 0);
  sm.join(pair, 7, 7, 0);
  sm.join(pair, 8, 8, 0);
  CHECK(sm.route_media(pair, 7, 0, 10) == std::vector<std::uint32_t>{8});
}

TEST_CASE("route_position stores the last position") {
  SessionManager sm;
  const auto s = sm.create_session(3, 0);
  sm.join(s, 1, 1, 0);
  sm.join(s, 2, 2, 0);
  sm.route_position(s, 1, {1, 2, 3, 0, 0, 0, 1});
  CHECK(sm.route_position(s, 1, {4, 5, 6, 0, 0, 0, 1}) == std::vector<std::uint32_t>{2});
  CHECK(*sm.get(s).members.at(1).position == wire::Position{4, 5, 6, 0, 0, 0, 1});
  CHECK(code_of([&] { sm.route_position(s, 3, {}); }) == Errc::NotAMember);
}

TEST_CASE("heartbeat expiry") {
  SessionManager sm(5'000'000);
  const auto s = sm.create_session(4, 0);
  sm.join(s, 1, 1, 0);
  sm.join(s, 2, 2, 0);
  sm.join(s, 3, 3, 0);
  for (std::uint64_t t = 1'000'000; t <= 5'000'000; t += 1'000'000) {
    sm.heartbeat(s, 1, t);
    sm.heartbeat(s, 3, t);
    CHECK(sm.heartbeat_tick(t).empty());  // exactly at the timeout is still alive
  }
  sm.heartbeat(s, 1, 5'000'001);
  sm.heartbeat(s, 3, 5'000'001);
  const auto gone = sm.heartbeat_tick(5'000'001);
  REQUIRE(gone.size() == 1);
  CHECK(gone[0].member_id == 2);
  CHECK(sm.get(s).members.size() == 2);
  CHECK(sm.join(s, 2, 2, 5'000'002).seat == 1);
  // Stamps never move backwards.
  sm.heartbeat(s, 1, 100);
  CHECK(sm.get(s).members.at(1).last_heartbeat_us == 5'000'001);
}

namespace {

struct Harness {
  Orchestrator orch;
  std::map<ConnId, std::vector<WireMessage>> inbox;
  std::map<ConnId, std::uint32_t> seq;

  void deliver(const std::vector<Outbound>& out) {
    for (const auto& o : out) {
      const auto r = wire::decode_message(*o.bytes);
      REQUIRE(r.status == wire::DecodeStatus::Ok);
      inbox[o.conn].push_back(r.message);
    }
  }
  void send(ConnId conn, MsgType type, std::uint32_t session, Bytes payload = {}, std::uint64_t now = 0) {
    WireMessage m;
    m.type = type;
    m.session_id = session;
    m.sender_id = std::uint32_t(conn) + 100;
    m.seq = seq[conn]++;
    m.send_ts_us = now;
    m.payload = std::move(payload);
    auto raw = std::make_shared<const Bytes>(wire::encode_message(m));
    deliver(orch.on_message(conn, m, raw, now));
  }
  WireMessage last(ConnId conn) { return inbox.at(conn).back(); }
};

}  // namespace

TEST_CASE("orchestrator signaling flow") {
  Harness h;
  for (ConnId c = 1; c <= 3; ++c) {
    h.send(c, MsgType::Hello, 0);
    CHECK(h.last(c).type == MsgType::HelloAck);
  }
  h.send(1, MsgType::Create, 0, wire::encode_u8(3));
  REQUIRE(h.last(1).type == MsgType::CreateAck);
  const auto sid = wire::decode_u32(h.last(1).payload);
  CHECK(h.last(1).session_id == sid);

  h.send(1, MsgType::Join, sid);
  CHECK(wire::decode_join_ack(h.last(1).payload).seat == 0);
  h.send(2, MsgType::Join, sid);
  CHECK(wire::decode_join_ack(h.last(2).payload).seat == 1);
  REQUIRE(h.last(1).type == MsgType::Roster);
  CHECK(wire::decode_roster(h.last(1).payload).size() == 2);
  h.send(3, MsgType::Join, sid);

  // Media: verbatim to the two others, never back to the sender.
  const std::size_t before1 = h.inbox[1].size();
  h.send(2, MsgType::MediaPc, sid, Bytes(50, 0xab));
  CHECK(h.inbox[1].size() == before1 + 1);
  CHECK(h.last(1).sender_id == 102);
  CHECK(h.last(1).payload == Bytes(50, 0xab));
  CHECK(h.last(3).type == MsgType::MediaPc);
  CHECK(h.last(2).type == MsgType::Roster);

  // Leave: ROSTER to survivors.
  h.send(3, MsgType::Leave, sid);
  CHECK(wire::decode_roster(h.last(1).payload).size() == 2);
  CHECK(wire::decode_roster(h.last(2).payload).size() == 2);

  // Errors come back as ERROR frames.
  h.send(3, MsgType::MediaPc, sid, Bytes(3));
  REQUIRE(h.last(3).type == MsgType::Error);
  CHECK(wire::decode_error(h.last(3).payload).code == wire::ErrorCode::NotAMember);
  h.send(3, MsgType::Join, 12345);
  CHECK(wire::decode_error(h.last(3).payload).code == wire::ErrorCode::NoSuchSession);
  h.send(1, MsgType::Create, 0, wire::encode_u8(9));
  CHECK(wire::decode_error(h.last(1).payload).code == wire::ErrorCode::Config);
  h.send(1, MsgType::Position, sid, Bytes{1, 2});
  CHECK(wire::decode_error(h.last(1).payload).code == wire::ErrorCode::BadPayload);

  // Unbound connections must HELLO first.
  h.send(9, MsgType::Join, sid);
  CHECK(wire::decode_error(h.last(9).payload).code == wire::ErrorCode::Protocol);
}

TEST_CASE("orchestrator expiry, disconnect and logging") {
  OrchestratorConfig cfg;
  cfg.heartbeat_timeout_ms = 1000;
  Harness h{Orchestrator(cfg), {}, {}};
  std::vector<nlohmann::json> log;
  h.orch.set_log_sink([&](const nlohmann::json& j) { log.push_back(j); });

  for (ConnId c = 1; c <= 3; ++c) h.send(c, MsgType::Hello, 0);
  h.send(1, MsgType::Create, 0);
  const auto sid = wire::decode_u32(h.last(1).payload);
  for (ConnId c = 1; c <= 3; ++c) h.send(c, MsgType::Join, sid);

  h.send(1, MsgType::Heartbeat, sid, {}, 900'000);
  h.send(2, MsgType::Heartbeat, sid, {}, 900'000);
  h.deliver(h.orch.tick(1'500'000));
  CHECK(h.orch.sessions().get(sid).members.size() == 2);
  // Survivors got PEER_TIMEOUT then ROSTER.
  const auto& in1 = h.inbox[1];
  REQUIRE(in1.size() >= 2);
  CHECK(in1[in1.size() - 2].type == MsgType::Error);
  CHECK(wire::decode_error(in1[in1.size() - 2].payload).code == wire::ErrorCode::PeerTimeout);
  CHECK(wire::decode_roster(in1.back().payload).size() == 2);

  h.deliver(h.orch.on_disconnect(2, 1'600'000));
  CHECK(wire::decode_roster(h.last(1).payload) == std::vector<wire::RosterEntry>{{101, 0}});

  std::set<std::string> events;
  for (const auto& j : log) events.insert(j.at("event").get<std::string>());
  for (const char* e : {"hello", "session_created", "join", "expire", "disconnect"}) CHECK(events.count(e) == 1);
  h.orch.log_stats_snapshot(2'000'000);
  CHECK(log.back().at("event") == "relay_stats");
}

TEST_CASE("config json") {
  const auto c = config_from_json(nlohmann::json{{"listen_port", 9000}, {"max_members", 4}, {"heartbeat_timeout_ms", 2500}});
  CHECK(c.listen_port == 9000);
  CHECK(c.max_members == 4);
  CHECK(c.heartbeat_timeout_ms == 2500);
  CHECK(config_from_json(config_to_json(c)).max_members == 4);
  CHECK(code_of([] { config_from_json(nlohmann::json{{"max_members", 8}}); }) == Errc::ConfigError);
  CHECK(code_of([] { config_from_json(nlohmann::json{{"bogus", 1}}); }) == Errc::ConfigError);
  CHECK(code_of([] { load_config("/nonexistent/orch.json"); }) == Errc::IoError);
}

TEST_CASE("TCP server relays between real sockets") {
  Orchestrator orch;
  TcpServer server(orch, "127.0.0.1", 0);
  std::atomic<bool> stop{false};
  std::thread loop([&] { server.run(stop); });

  auto hello = [](wire::Socket& s, std::uint32_t id, MsgType type, std::uint32_t session, Bytes payload = {}) {
    WireMessage m;
    m.type = type;
    m.sender_id = id;
    m.session_id = session;
    m.payload = std::move(payload);
    wire::send_all(s, wire::encode_message(m));
  };
  wire::Socket a = wire::connect_tcp("127.0.0.1", server.port());
  wire::Socket b = wire::connect_tcp("127.0.0.1", server.port());
  wire::FrameDecoder da, db;
  hello(a, 1, MsgType::Hello, 0);
  hello(b, 2, MsgType::Hello, 0);
  CHECK(wire::recv_message(a, da)->type == MsgType::HelloAck);
  CHECK(wire::recv_message(b, db)->type == MsgType::HelloAck);
  hello(a, 1, MsgType::Create, 0, wire::encode_u8(2));
  const auto sid = wire::decode_u32(wire::recv_message(a, da)->payload);
  hello(a, 1, MsgType::Join, sid);
  CHECK(wire::recv_message(a, da)->type == MsgType::JoinAck);
  hello(b, 2, MsgType::Join, sid);
  CHECK(wire::recv_message(b, db)->type == MsgType::JoinAck);
  CHECK(wire::recv_message(a, da)->type == MsgType::Roster);

  const Bytes big(3 << 20, 0x5a);  // larger than socket buffers
  hello(a, 1, MsgType::MediaPc, sid, big);
  const auto got = wire::recv_message(b, db);
  REQUIRE(got);
  CHECK(got->sender_id == 1);
  CHECK(got->payload == big);

  a.close();
  const auto roster = wire::recv_message(b, db);
  REQUIRE(roster);
  CHECK(roster->type == MsgType::Roster);
  CHECK(wire::decode_roster(roster->payload).size() == 1);

  stop = true;
  loop.join();
}
