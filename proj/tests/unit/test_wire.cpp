// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "holo/common/error.hpp"
#include "holo/common/random.hpp"
#include "holo/wire/wire.hpp"

using namespace holo;
using namespace holo::wire;

namespace {

WireMessage random_message(SplitMix64& rng, std::size_t max_payload = 300) {
  WireMessage m;
  m.type = static_cast<MsgType>(rng.uniform_int(1, 13));
  m.session_id = std::uint32_t(rng.next());
  m.sender_id = std::uint32_t(rng.next());
  m.seq = std::uint32_t(rng.next());
  m.send_ts_us = rng.next();
  m.payload.resize(std::size_t(rng.uniform_int(0, std::int64_t(max_payload))));
  for (auto& b : m.payload) b = std::uint8_t(rng.next());
  return m;
}

Bytes concat(std::initializer_list<Bytes> parts) {
  Bytes out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

TEST_CASE("header layout") {
  WireMessage hb;
  hb.type = MsgType::Heartbeat;
  hb.session_id = 0x01020304;
  hb.sender_id = 0x0a0b0c0d;
  hb.seq = 7;
  hb.send_ts_us = 0x1122334455667788ull;
  const Bytes b = encode_message(hb);
  REQUIRE(b.size() == kHeaderSize);
  CHECK(kHeaderSize == 2 + 1 + 1 + 4 + 4 + 4 + 8 + 4);
  const Bytes expected{'H', 'M', 1, 11, 1, 2, 3, 4, 0x0a, 0x0b, 0x0c, 0x0d, 0, 0, 0, 7,
                       0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0, 0, 0, 0};
  CHECK(b == expected);
}

TEST_CASE("roundtrip for every type") {
  SplitMix64 rng(42);
  for (int i = 0; i < 5000; ++i) {
    const WireMessage m = random_message(rng);
    const Bytes b = encode_message(m);
    const auto r = decode_message(b);
    REQUIRE(r.status == DecodeStatus::Ok);
    CHECK(r.consumed == b.size());
    CHECK(r.message == m);
  }
}

TEST_CASE("payload size limit") {
  WireMessage m;
  m.type = MsgType::MediaPc;
  m.payload.resize(kMaxPayload + 1);
  try {
    encode_message(m);
    FAIL("expected PayloadTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PayloadTooLarge);
  }
  m.payload.resize(kMaxPayload);
  const Bytes b = encode_message(m);
  CHECK(decode_message(b).status == DecodeStatus::Ok);

  // A header declaring more than the limit is rejected without waiting for it.
  Bytes hdr(b.begin(), b.begin() + kHeaderSize);
  hdr[24] = 0x01;
  hdr[25] = 0x00;
  hdr[26] = 0x00;
  hdr[27] = 0x01;
  const auto r = decode_message(hdr);
  CHECK(r.status == DecodeStatus::PayloadTooLarge);
  CHECK(r.offset == 24);
}

TEST_CASE("incomplete, bad magic, bad version, bad type") {
  WireMessage m;
  m.type = MsgType::Position;
  m.payload = encode_position({1, 2, 3, 0, 0, 0, 1});
  const Bytes b = encode_message(m);

  const auto r10 = decode_message(ByteView(b).first(10));
  CHECK(r10.status == DecodeStatus::NeedMoreData);
  CHECK(r10.need == kHeaderSize - 10);
  const auto r30 = decode_message(ByteView(b).first(30));
  CHECK(r30.status == DecodeStatus::NeedMoreData);
  CHECK(r30.need == b.size() - 30);
  CHECK(decode_message({}).status == DecodeStatus::NeedMoreData);

  Bytes x = b;
  x[0] = 'X';
  auto r = decode_message(x);
  CHECK(r.status == DecodeStatus::FrameError);
  CHECK(r.offset == 0);
  x = b;
  x[1] = 'N';
  r = decode_message(x);
  CHECK(r.status == DecodeStatus::FrameError);
  CHECK(r.offset == 1);
  x = b;
  x[2] = 2;
  r = decode_message(x);
  CHECK(r.status == DecodeStatus::ProtocolError);
  CHECK(r.offset == 2);
  for (std::uint8_t t : {0, 14, 255}) {
    x = b;
    x[3] = t;
    r = decode_message(x);
    CHECK(r.status == DecodeStatus::ProtocolError);
    CHECK(r.offset == 3);
  }
}

TEST_CASE("two concatenated frames") {
  SplitMix64 rng(1);
  const Bytes a = encode_message(random_message(rng)), b = encode_message(random_message(rng));
  const Bytes both = concat({a, b});
  const auto r1 = decode_message(both);
  REQUIRE(r1.status == DecodeStatus::Ok);
  CHECK(r1.consumed == a.size());
  const auto r2 = decode_message(ByteView(both).subspan(r1.consumed));
  REQUIRE(r2.status == DecodeStatus::Ok);
  CHECK(r2.consumed == b.size());
}

TEST_CASE("FrameDecoder reassembles byte-by-byte and resyncs after corruption") {
  auto frame = [](std::uint32_t seq) {
    WireMessage m;
    m.type = MsgType::MediaPc;
    m.sender_id = 5;
    m.seq = seq;
    m.payload.assign(100, std::uint8_t(0x20 + seq));  // no 'H' bytes inside
    return m;
  };
  const Bytes f1 = encode_message(frame(1)), f2 = encode_message(frame(2)), f3 = encode_message(frame(3));

  FrameDecoder dribble;
  std::vector<std::uint32_t> seqs;
  for (std::uint8_t byte : concat({f1, f2, f3})) {
    dribble.feed(ByteView(&byte, 1));
    while (auto m = dribble.next()) seqs.push_back(m->seq);
  }
  CHECK(seqs == std::vector<std::uint32_t>{1, 2, 3});
  CHECK(dribble.buffered() == 0);

  Bytes bad = f2;
  bad[0] = 'Z';
  FrameDecoder d;
  d.feed(concat({f1, bad, f3}));
  seqs.clear();
  while (auto m = d.next()) seqs.push_back(m->seq);
  CHECK(seqs == std::vector<std::uint32_t>{1, 3});
  CHECK(d.errors() == 1);
  CHECK(d.skipped_bytes() == bad.size());
  CHECK(d.last_error() == DecodeStatus::FrameError);
}

TEST_CASE("random bytes never crash the decoder") {
  SplitMix64 rng(9);
  for (int i = 0; i < 100'000; ++i) {
    Bytes b(std::size_t(rng.uniform_int(0, 64)));
    for (auto& x : b) x = std::uint8_t(rng.next());
    if (rng.uniform() < 0.5 && b.size() >= 4) {
      b[0] = 'H';
      b[1] = 'M';
      b[2] = 1;
      b[3] = std::uint8_t(rng.uniform_int(0, 14));
    }
    const auto r = decode_message(b);
    if (r.status == DecodeStatus::Ok) {
      CHECK(r.consumed <= b.size());
      CHECK(r.message.payload.size() == r.consumed - kHeaderSize);
    }
    if (r.status == DecodeStatus::NeedMoreData) CHECK(r.need > 0);
  }
}

TEST_CASE("payload codecs") {
  const Position p{1.5f, -2, 3, 0, 0.7071f, 0, 0.7071f};
  CHECK(decode_position(encode_position(p)) == p);
  CHECK(encode_position(p).size() == 28);

  const std::vector<RosterEntry> roster{{10, 0}, {11, 2}, {12, 1}};
  CHECK(decode_roster(encode_roster(roster)) == roster);
  CHECK(decode_roster(encode_roster({})).empty());

  const JoinAck ack{3, roster};
  CHECK(decode_join_ack(encode_join_ack(ack)) == ack);

  const ErrorPayload e{ErrorCode::SessionFull, "session 4 is full"};
  CHECK(decode_error(encode_error(e)) == e);
  CHECK(decode_u32(encode_u32(0xdeadbeef)) == 0xdeadbeef);
  CHECK(decode_u8(encode_u8(6)) == 6);

  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& err) {
      return err.code();
    }
    return Errc::IoError;
  };
  Bytes short_pos = encode_position(p);
  short_pos.pop_back();
  CHECK(code([&] { decode_position(short_pos); }) == Errc::ProtocolError);
  Bytes long_roster = encode_roster(roster);
  long_roster.push_back(0);
  CHECK(code([&] { decode_roster(long_roster); }) == Errc::ProtocolError);
  CHECK(code([&] { decode_roster(Bytes{2, 0, 0}); }) == Errc::ProtocolError);
  CHECK(code([&] { decode_error(Bytes{1}); }) == Errc::ProtocolError);
}
