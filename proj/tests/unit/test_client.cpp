// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "holo/client/participant.hpp"
#include "holo/common/error.hpp"

using namespace holo;
using namespace holo::client;
using holo::wire::MsgType;
using holo::wire::WireMessage;

namespace {

constexpr std::uint64_t kT0 = 1'000'000'000;

ParticipantConfig small_config(std::uint32_t id, std::int64_t offset = 0) {
  ParticipantConfig c;
  c.member_id = id;
  c.scene.seed = id;
  c.scene.target_points = 4000;
  c.cam = capture::default_camera(c.scene);
  c.clock_offset_us = offset;
  return c;
}

WireMessage from_orch(MsgType type, Bytes payload, std::uint32_t session = 1) {
  WireMessage m;
  m.type = type;
  m.session_id = session;
  m.payload = std::move(payload);
  return m;
}

void join_session(Participant& p, std::vector<wire::RosterEntry> roster) {
  p.hello(kT0);
  p.on_message(from_orch(MsgType::HelloAck, {}), kT0);
  p.join(1, kT0);
  std::uint8_t seat = 0;
  for (const auto& e : roster)
    if (e.member_id == p.id()) seat = e.seat;
  p.on_message(from_orch(MsgType::JoinAck, wire::encode_join_ack({seat, roster})), kT0);
}

}  // namespace

TEST_CASE("config validation and offset draws") {
  ParticipantConfig c = small_config(1);
  CHECK_NOTHROW(c.validate());
  c.fps = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = small_config(1, 50'001);
  CHECK_THROWS_AS(c.validate(), Error);

  for (std::uint32_t m = 1; m < 200; ++m) {
    const auto o = draw_clock_offset(7, m);
    CHECK(o >= -3000);
    CHECK(o <= 3000);
    CHECK(o == draw_clock_offset(7, m));
  }
  CHECK(draw_clock_offset(7, 1) != draw_clock_offset(8, 1));
}

TEST_CASE("signaling state machine") {
  Participant p(small_config(5));
  CHECK(p.state() == State::Idle);
  const auto h = p.hello(kT0);
  CHECK(h.type == MsgType::Hello);
  CHECK(h.sender_id == 5);
  CHECK(p.state() == State::Greeting);
  p.on_message(from_orch(MsgType::HelloAck, {}), kT0);
  CHECK(p.state() == State::Ready);
  p.on_message(from_orch(MsgType::CreateAck, wire::encode_u32(77)), kT0);
  CHECK(p.created_session() == 77u);

  const auto j = p.join(77, kT0);
  CHECK(j.session_id == 77);
  CHECK(p.state() == State::Joining);
  p.on_message(from_orch(MsgType::Error, wire::encode_error({wire::ErrorCode::SessionFull, "full"})), kT0);
  CHECK(p.state() == State::Failed);
  CHECK(p.errors().back().code == wire::ErrorCode::SessionFull);
}

TEST_CASE("roster handling") {
  Participant p(small_config(1));
  join_session(p, {{1, 0}, {2, 1}, {3, 2}});
  CHECK(p.state() == State::Joined);
  CHECK(p.seat() == 0);
  CHECK(p.remote_seats().size() == 2);

  const auto four = wire::encode_roster({{1, 0}, {2, 1}, {3, 2}, {4, 3}});
  p.on_message(from_orch(MsgType::Roster, four), kT0);
  CHECK(p.remote_seats().size() == 3);
  p.on_message(from_orch(MsgType::Roster, four), kT0);
  CHECK(p.remote_seats().size() == 3);

  p.on_message(from_orch(MsgType::Roster, wire::encode_roster({{1, 0}, {4, 3}})), kT0);
  CHECK(p.remote_seats() == std::map<std::uint32_t, std::uint8_t>{{4, 3}});
  // Departed sources are frozen, not deleted.
  CHECK(p.sink().sources.count(2) == 1);
  CHECK(p.sink().sources.at(2).departed);
}

TEST_CASE("capture cadence, seq and self view") {
  Participant p(small_config(1, 1500));
  join_session(p, {{1, 0}, {2, 1}});
  p.start_media(kT0);
  std::uint32_t last_seq = 0;
  std::size_t sent = 0;
  for (std::uint64_t t = kT0; t < kT0 + 10'000'000; t += 1000) {
    if (auto m = p.capture_tick(t, t + 5000)) {
      CHECK(m->type == MsgType::MediaPc);
      if (sent > 0) CHECK(m->seq == last_seq + 1);
      last_seq = m->seq;
      ++sent;
    }
  }
  CHECK(sent >= 149);
  CHECK(sent <= 151);
  CHECK(p.published() == sent);
  CHECK(p.sink().self_view.size() == sent);
  const auto& first = p.sink().self_view.front();
  CHECK(first.capture_ts_us == kT0 + 1500);
  CHECK(first.render_ts_us == kT0 + 6500);
  CHECK(p.skipped() == 0);
}

TEST_CASE("late ticks count as skips") {
  Participant p(small_config(1));
  join_session(p, {{1, 0}, {2, 1}});
  p.start_media(kT0);
  REQUIRE(p.capture_tick(kT0, kT0));
  // Jump past two further boundaries: one capture, one skip.
  REQUIRE(p.capture_tick(kT0 + 140'000, kT0 + 140'000));
  CHECK(p.skipped() == 1);
  CHECK(p.next_capture_us() == kT0 + 200'000);
  p.skip_capture();
  CHECK(p.skipped() == 2);
  CHECK_FALSE(p.capture_tick(kT0 + 210'000, kT0 + 210'000));
}

TEST_CASE("media reception, ordering and errors") {
  Participant tx(small_config(2, -2000));
  Participant rx(small_config(1, 1000));
  join_session(tx, {{1, 0}, {2, 1}});
  join_session(rx, {{1, 0}, {2, 1}});
  tx.start_media(kT0);
  std::vector<WireMessage> frames;
  for (int k = 0; k < 4; ++k) {
    const std::uint64_t t = tx.next_capture_us();
    frames.push_back(*tx.capture_tick(t, t));
  }

  CHECK(rx.on_message(frames[0], kT0 + 150'000) == MediaOutcome::Rendered);
  const auto& src = rx.sink().sources.at(2);
  REQUIRE(src.frames.size() == 1);
  CHECK(src.frames[0].capture_ts_us == kT0 - 2000);
  CHECK(src.frames[0].render_ts_us == kT0 + 151'000);

  CHECK(rx.on_message(frames[2], kT0 + 300'000) == MediaOutcome::Rendered);
  CHECK(src.seq_gaps == 1);
  CHECK(rx.on_message(frames[1], kT0 + 310'000) == MediaOutcome::OutOfOrder);
  CHECK(src.out_of_order == 1);

  WireMessage bad = frames[3];
  bad.payload[bad.payload.size() / 2] ^= 0xff;
  bad.payload.resize(bad.payload.size() - 3);
  CHECK(rx.on_message(bad, kT0 + 400'000) == MediaOutcome::DecodeError);
  CHECK(src.decode_errors == 1);
  CHECK(src.frames_received == 2);

  // Own frames never render.
  CHECK(tx.on_message(frames[0], kT0) == MediaOutcome::Rejected);
}

TEST_CASE("delay is positive when clocks agree") {
  Participant tx(small_config(2));
  Participant rx(small_config(1));
  join_session(tx, {{1, 0}, {2, 1}});
  join_session(rx, {{1, 0}, {2, 1}});
  tx.start_media(kT0);
  for (int k = 0; k < 10; ++k) {
    const std::uint64_t t = tx.next_capture_us();
    rx.on_message(*tx.capture_tick(t, t + 1000), t + 1000 + 50'000);
  }
  for (const auto& f : rx.sink().sources.at(2).frames) CHECK(f.render_ts_us > f.capture_ts_us);
}

TEST_CASE("decode memo shares exact decodes only") {
  auto memo = std::make_shared<DecodeMemo>();
  Participant tx(small_config(3));
  Participant a(small_config(1)), b(small_config(2));
  for (Participant* p : {&tx, &a, &b}) join_session(*p, {{1, 0}, {2, 1}, {3, 2}});
  a.set_decode_memo(memo);
  b.set_decode_memo(memo);
  tx.start_media(kT0);
  const auto f = *tx.capture_tick(kT0, kT0);
  CHECK(a.on_message(f, kT0 + 1) == MediaOutcome::Rendered);
  CHECK(memo->lookup(3, f.seq, f.payload).has_value());
  CHECK(b.on_message(f, kT0 + 2) == MediaOutcome::Rendered);
  Bytes other = f.payload;
  other.back() ^= 1;
  CHECK_FALSE(memo->lookup(3, f.seq, other).has_value());
}

TEST_CASE("heartbeats and positions while joined") {
  Participant p(small_config(1));
  CHECK(p.periodic(kT0).empty());
  join_session(p, {{1, 0}, {2, 3}});
  const auto first = p.periodic(kT0);
  REQUIRE(first.size() == 2);
  CHECK(first[0].type == MsgType::Heartbeat);
  CHECK(first[1].type == MsgType::Position);
  const auto pos = wire::decode_position(first[1].payload);
  CHECK(std::hypot(pos.x, pos.z) == doctest::Approx(1.2));
  CHECK(p.periodic(kT0 + 500'000).empty());
  CHECK(p.periodic(kT0 + 1'000'000).size() == 2);
  p.leave(kT0 + 1'100'000);
  CHECK(p.periodic(kT0 + 5'000'000).empty());
}
