// SPDX-License-Identifier: Apache-2.0
#include "holo/wire/wire.hpp"

#include <algorithm>

#include "holo/common/error.hpp"

namespace holo::wire {

bool is_valid_type(std::uint8_t t) noexcept { return t >= 1 && t <= 13; }

std::string_view type_name(MsgType t) noexcept {
  switch (t) {
    case MsgType::Hello: return "HELLO";
    case MsgType::HelloAck: return "HELLO_ACK";
    case MsgType::Create: return "CREATE";
    case MsgType::CreateAck: return "CREATE_ACK";
    case MsgType::Join: return "JOIN";
    case MsgType::JoinAck: return "JOIN_ACK";
    case MsgType::Leave: return "LEAVE";
    case MsgType::MediaPc: return "MEDIA_PC";
    case MsgType::MediaAudio: return "MEDIA_AUDIO";
    case MsgType::Position: return "POSITION";
    case MsgType::Heartbeat: return "HEARTBEAT";
    case MsgType::Error: return "ERROR";
    case MsgType::Roster: return "ROSTER";
  }
  return "UNKNOWN";
}

std::string_view status_name(DecodeStatus s) noexcept {
  switch (s) {
    case DecodeStatus::Ok: return "Ok";
    case DecodeStatus::NeedMoreData: return "NeedMoreData";
    case DecodeStatus::FrameError: return "FrameError";
    case DecodeStatus::ProtocolError: return "ProtocolError";
    case DecodeStatus::PayloadTooLarge: return "PayloadTooLarge";
  }
  return "Unknown";
}

Bytes encode_message(const WireMessage& m) {
  if (m.payload.size() > kMaxPayload)
    throw Error(Errc::PayloadTooLarge, "payload of " + std::to_string(m.payload.size()) + " bytes exceeds 16 MiB");
  if (m.version != kVersion) throw Error(Errc::ProtocolError, "unsupported version " + std::to_string(m.version));
  if (!is_valid_type(static_cast<std::uint8_t>(m.type))) throw Error(Errc::ProtocolError, "invalid message type");
  Bytes out;
  out.reserve(kHeaderSize + m.payload.size());
  ByteWriter w(out);
  w.u8('H');
  w.u8('M');
  w.u8(m.version);
  w.u8(static_cast<std::uint8_t>(m.type));
  w.u32(m.session_id);
  w.u32(m.sender_id);
  w.u32(m.seq);
  w.u64(m.send_ts_us);
  w.u32(static_cast<std::uint32_t>(m.payload.size()));
  w.bytes(m.payload);
  return out;
}

DecodeResult decode_message(ByteView b) noexcept {
  DecodeResult r;
  auto fail = [&r](DecodeStatus s, std::size_t off) {
    r.status = s;
    r.offset = off;
    return r;
  };
  // Each check only looks at bytes already present, so a bad prefix is
  // reported as early as possible.
  if (b.size() >= 1 && b[0] != 'H') return fail(DecodeStatus::FrameError, 0);
  if (b.size() >= 2 && b[1] != 'M') return fail(DecodeStatus::FrameError, 1);
  if (b.size() >= 3 && b[2] != kVersion) return fail(DecodeStatus::ProtocolError, 2);
  if (b.size() >= 4 && !is_valid_type(b[3])) return fail(DecodeStatus::ProtocolError, 3);
  if (b.size() < kHeaderSize) {
    r.need = kHeaderSize - b.size();
    return r;
  }
  const std::uint32_t len = load_be32(b.data() + 24);
  if (len > kMaxPayload) return fail(DecodeStatus::PayloadTooLarge, 24);
  if (b.size() - kHeaderSize < len) {
    r.need = kHeaderSize + len - b.size();
    return r;
  }

  WireMessage& m = r.message;
  m.version = b[2];
  m.type = static_cast<MsgType>(b[3]);
  m.session_id = load_be32(b.data() + 4);
  m.sender_id = load_be32(b.data() + 8);
  m.seq = load_be32(b.data() + 12);
  m.send_ts_us = (std::uint64_t{load_be32(b.data() + 16)} << 32) | load_be32(b.data() + 20);
  m.payload.assign(b.begin() + kHeaderSize, b.begin() + static_cast<std::ptrdiff_t>(kHeaderSize + len));
  r.status = DecodeStatus::Ok;
  r.consumed = kHeaderSize + len;
  return r;
}

std::size_t find_magic(ByteView b, std::size_t from) noexcept {
  for (std::size_t i = from; i < b.size(); ++i) {
    if (b[i] != 'H') continue;
    if (i + 1 == b.size() || b[i + 1] == 'M') return i;
  }
  return b.size();
}

void FrameDecoder::feed(ByteView bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

std::optional<WireMessage> FrameDecoder::next() {
  for (;;) {
    const ByteView pending = ByteView(buf_).subspan(head_);
    DecodeResult r = decode_message(pending);
    if (r.status == DecodeStatus::Ok) {
      head_ += r.consumed;
      compact();
      return std::move(r.message);
    }
    if (r.status == DecodeStatus::NeedMoreData) {
      compact();
      return std::nullopt;
    }
    ++errors_;
    last_error_ = r.status;
    const std::size_t skip = find_magic(pending, 1);
    skipped_ += skip;
    head_ += skip;
  }
}

void FrameDecoder::compact() {
  if (head_ == buf_.size()) {
    buf_.clear();
    head_ = 0;
  } else if (head_ > 65536 && head_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(head_));
    head_ = 0;
  }
}

// ---- payloads -------------------------------------------------------------

namespace {

void expect_end(const ByteReader& r, std::string_view what) {
  if (r.remaining() != 0) throw Error(Errc::ProtocolError, std::string(what) + " payload has trailing bytes", r.position());
}

}  // namespace

Bytes encode_position(const Position& p) {
  Bytes out;
  ByteWriter w(out);
  for (float v : {p.x, p.y, p.z, p.qx, p.qy, p.qz, p.qw}) w.f32(v);
  return out;
}

Position decode_position(ByteView b) {
  ByteReader r(b, Errc::ProtocolError);
  Position p;
  for (float* v : {&p.x, &p.y, &p.z, &p.qx, &p.qy, &p.qz, &p.qw}) *v = r.f32();
  expect_end(r, "POSITION");
  return p;
}

namespace {

void write_roster(ByteWriter& w, const std::vector<RosterEntry>& roster) {
  if (roster.size() > 255) throw Error(Errc::ProtocolError, "roster too long");
  w.u8(static_cast<std::uint8_t>(roster.size()));
  for (const auto& e : roster) {
    w.u32(e.member_id);
    w.u8(e.seat);
  }
}

std::vector<RosterEntry> read_roster(ByteReader& r) {
  const std::uint8_t n = r.u8();
  std::vector<RosterEntry> roster(n);
  for (auto& e : roster) {
    e.member_id = r.u32();
    e.seat = r.u8();
  }
  return roster;
}

}  // namespace

Bytes encode_roster(const std::vector<RosterEntry>& roster) {
  Bytes out;
  ByteWriter w(out);
  write_roster(w, roster);
  return out;
}

std::vector<RosterEntry> decode_roster(ByteView b) {
  ByteReader r(b, Errc::ProtocolError);
  auto roster = read_roster(r);
  expect_end(r, "ROSTER");
  return roster;
}

Bytes encode_join_ack(const JoinAck& ack) {
  Bytes out;
  ByteWriter w(out);
  w.u8(ack.seat);
  write_roster(w, ack.roster);
  return out;
}

JoinAck decode_join_ack(ByteView b) {
  ByteReader r(b, Errc::ProtocolError);
  JoinAck ack;
  ack.seat = r.u8();
  ack.roster = read_roster(r);
  expect_end(r, "JOIN_ACK");
  return ack;
}

Bytes encode_error(const ErrorPayload& e) {
  Bytes out;
  ByteWriter w(out);
  w.u16(static_cast<std::uint16_t>(e.code));
  w.text(e.text);
  return out;
}

ErrorPayload decode_error(ByteView b) {
  ByteReader r(b, Errc::ProtocolError);
  ErrorPayload e;
  e.code = static_cast<ErrorCode>(r.u16());
  const ByteView text = r.take(r.remaining());
  e.text.assign(text.begin(), text.end());
  return e;
}

Bytes encode_u32(std::uint32_t v) {
  Bytes out;
  ByteWriter(out).u32(v);
  return out;
}

std::uint32_t decode_u32(ByteView b) {
  ByteReader r(b, Errc::ProtocolError);
  const auto v = r.u32();
  expect_end(r, "u32");
  return v;
}

Bytes encode_u8(std::uint8_t v) { return Bytes{v}; }

std::uint8_t decode_u8(ByteView b) {
  ByteReader r(b, Errc::ProtocolError);
  const auto v = r.u8();
  expect_end(r, "u8");
  return v;
}

}  // namespace holo::wire
