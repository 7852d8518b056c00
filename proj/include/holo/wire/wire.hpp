// SPDX-License-Identifier: Apache-2.0
//
// Framed binary protocol between clients and the orchestrator. The layout is
// documented in docs/protocol.md. All integers are big-endian.
//
//   "HM" | version u8 | type u8 | session u32 | sender u32 | seq u32 |
//   send_ts_us u64 | payload_len u32 | payload
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "holo/common/bytes.hpp"

namespace holo::wire {

enum class MsgType : std::uint8_t {
  Hello = 1,
  HelloAck = 2,
  Create = 3,
  CreateAck = 4,
  Join = 5,
  JoinAck = 6,
  Leave = 7,
  MediaPc = 8,
  MediaAudio = 9,
  Position = 10,
  Heartbeat = 11,
  Error = 12,
  Roster = 13,
};

inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 28;
inline constexpr std::size_t kMaxPayload = std::size_t{16} << 20;
inline constexpr std::uint16_t kDefaultPort = 9470;

bool is_valid_type(std::uint8_t t) noexcept;
std::string_view type_name(MsgType t) noexcept;

struct WireMessage {
  std::uint8_t version = kVersion;
  MsgType type = MsgType::Heartbeat;
  std::uint32_t session_id = 0;  // 0 = unassigned
  std::uint32_t sender_id = 0;
  std::uint32_t seq = 0;         // per (sender, type)
  std::uint64_t send_ts_us = 0;  // sender clock
  Bytes payload;

  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

/// Throws PayloadTooLarge above kMaxPayload, ProtocolError on an invalid
/// type or unsupported version.
Bytes encode_message(const WireMessage& m);

enum class DecodeStatus { Ok, NeedMoreData, FrameError, ProtocolError, PayloadTooLarge };
std::string_view status_name(DecodeStatus s) noexcept;

struct DecodeResult {
  DecodeStatus status = DecodeStatus::NeedMoreData;
  WireMessage message;       // valid when status == Ok
  std::size_t consumed = 0;  // frame length when Ok, else 0
  std::size_t need = 0;      // minimum additional bytes when NeedMoreData
  std::size_t offset = 0;    // offending byte for the error statuses
};

/// Parses one frame from the front of `bytes`. Total: never throws, never
/// reads beyond the frame it reports.
DecodeResult decode_message(ByteView bytes) noexcept;

/// Offset of the next "HM" at or after `from`, or bytes.size() when absent.
/// A trailing lone 'H' is reported as a candidate.
std::size_t find_magic(ByteView bytes, std::size_t from) noexcept;

/// Per-connection stream reassembler. After a framing or protocol error it
/// discards bytes up to the next magic and carries on.
class FrameDecoder {
 public:
  void feed(ByteView bytes);
  std::optional<WireMessage> next();

  std::size_t buffered() const noexcept { return buf_.size() - head_; }
  std::size_t errors() const noexcept { return errors_; }
  std::size_t skipped_bytes() const noexcept { return skipped_; }
  std::optional<DecodeStatus> last_error() const noexcept { return last_error_; }

 private:
  void compact();

  Bytes buf_;
  std::size_t head_ = 0;
  std::size_t errors_ = 0;
  std::size_t skipped_ = 0;
  std::optional<DecodeStatus> last_error_;
};

// ---- payloads -------------------------------------------------------------
// Payload decoders throw ProtocolError on malformed input.

enum class ErrorCode : std::uint16_t {
  NoSuchSession = 1,
  SessionFull = 2,
  AlreadyJoined = 3,
  NotAMember = 4,
  Config = 5,
  PeerTimeout = 6,
  Protocol = 7,
  BadPayload = 8,
};

struct Position {
  float x = 0, y = 0, z = 0;
  float qx = 0, qy = 0, qz = 0, qw = 1;
  friend bool operator==(const Position&, const Position&) = default;
};

struct RosterEntry {
  std::uint32_t member_id = 0;
  std::uint8_t seat = 0;
  friend bool operator==(const RosterEntry&, const RosterEntry&) = default;
};

struct ErrorPayload {
  ErrorCode code = ErrorCode::Protocol;
  std::string text;
  friend bool operator==(const ErrorPayload&, const ErrorPayload&) = default;
};

struct JoinAck {
  std::uint8_t seat = 0;
  std::vector<RosterEntry> roster;
  friend bool operator==(const JoinAck&, const JoinAck&) = default;
};

Bytes encode_position(const Position& p);
Position decode_position(ByteView b);

Bytes encode_roster(const std::vector<RosterEntry>& roster);
std::vector<RosterEntry> decode_roster(ByteView b);

Bytes encode_join_ack(const JoinAck& ack);
JoinAck decode_join_ack(ByteView b);

Bytes encode_error(const ErrorPayload& e);
ErrorPayload decode_error(ByteView b);

Bytes encode_u32(std::uint32_t v);  // CREATE_ACK session id
std::uint32_t decode_u32(ByteView b);

Bytes encode_u8(std::uint8_t v);  // CREATE max_members
std::uint8_t decode_u8(ByteView b);

}  // namespace holo::wire
