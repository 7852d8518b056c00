// SPDX-License-Identifier: Apache-2.0
#include "holo/client/participant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "holo/common/error.hpp"
#include "holo/common/random.hpp"

namespace holo::client {

using wire::MsgType;
using wire::WireMessage;

void ParticipantConfig::validate() const {
  if (!(fps > 0)) throw Error(Errc::ConfigError, "fps must be positive");
  if (clock_offset_us > kMaxClockOffsetUs || clock_offset_us < -kMaxClockOffsetUs)
    throw Error(Errc::ConfigError, "clock offset must be within +-50 ms");
  if (heartbeat_interval_us == 0) throw Error(Errc::ConfigError, "heartbeat interval must be positive");
  scene.validate();
  cam.validate();
  codec.validate();
}

std::int64_t draw_clock_offset(std::uint64_t seed, std::uint32_t member_id, std::int64_t bound_us) {
  SplitMix64 rng(derive_seed(seed, {0xc10c, member_id}));
  return rng.uniform_int(-bound_us, bound_us);
}

std::optional<std::size_t> DecodeMemo::lookup(std::uint32_t sender, std::uint32_t seq, ByteView payload) const {
  auto it = by_sender_.find(sender);
  if (it == by_sender_.end()) return std::nullopt;
  for (const auto& e : it->second)
    if (e.seq == seq && std::equal(e.payload.begin(), e.payload.end(), payload.begin(), payload.end())) return e.points;
  return std::nullopt;
}

void DecodeMemo::store(std::uint32_t sender, std::uint32_t seq, ByteView payload, std::size_t points) {
  auto& q = by_sender_[sender];
  q.push_back({seq, Bytes(payload.begin(), payload.end()), points});
  if (q.size() > 16) q.pop_front();
}

std::string_view state_name(State s) noexcept {
  switch (s) {
    case State::Idle: return "idle";
    case State::Greeting: return "greeting";
    case State::Ready: return "ready";
    case State::Joining: return "joining";
    case State::Joined: return "joined";
    case State::Left: return "left";
    case State::Failed: return "failed";
  }
  return "unknown";
}

Participant::Participant(ParticipantConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::uint64_t Participant::local_time(std::uint64_t true_us) const noexcept {
  return std::uint64_t(std::int64_t(true_us) + cfg_.clock_offset_us);
}

WireMessage Participant::make(MsgType type, std::uint64_t true_us, Bytes payload) {
  WireMessage m;
  m.type = type;
  m.session_id = session_id_;
  m.sender_id = cfg_.member_id;
  m.seq = type_seq_[static_cast<std::uint8_t>(type)]++;
  m.send_ts_us = local_time(true_us);
  m.payload = std::move(payload);
  return m;
}

WireMessage Participant::hello(std::uint64_t true_us) {
  state_ = State::Greeting;
  return make(MsgType::Hello, true_us);
}

WireMessage Participant::create(std::uint8_t max_members, std::uint64_t true_us) {
  return make(MsgType::Create, true_us, wire::encode_u8(max_members));
}

WireMessage Participant::join(std::uint32_t session_id, std::uint64_t true_us) {
  session_id_ = session_id;
  state_ = State::Joining;
  return make(MsgType::Join, true_us);
}

WireMessage Participant::leave(std::uint64_t true_us) {
  WireMessage m = make(MsgType::Leave, true_us);
  state_ = State::Left;
  media_on_ = false;
  for (auto& [id, src] : sink_.sources) src.departed = true;
  return m;
}

wire::Position Participant::seat_position() const {
  // Round table of radius 1.2 m, everyone facing the centre.
  const double a = 2 * std::numbers::pi * seat_.value_or(0) / 6.0;
  const double yaw = a + std::numbers::pi;
  return {float(1.2 * std::sin(a)), 0.0f, float(1.2 * std::cos(a)), 0.0f, float(std::sin(yaw / 2)), 0.0f,
          float(std::cos(yaw / 2))};
}

std::vector<WireMessage> Participant::periodic(std::uint64_t true_us) {
  std::vector<WireMessage> out;
  if (state_ != State::Joined || true_us < next_periodic_us_) return out;
  out.push_back(make(MsgType::Heartbeat, true_us));
  out.push_back(make(MsgType::Position, true_us, wire::encode_position(seat_position())));
  next_periodic_us_ = true_us + cfg_.heartbeat_interval_us;
  return out;
}

void Participant::start_media(std::uint64_t first_capture_true_us) {
  media_on_ = true;
  media_origin_us_ = first_capture_true_us;
  next_frame_ = 0;
}

std::uint64_t Participant::due_at(std::uint64_t k) const noexcept {
  return media_origin_us_ + std::uint64_t(std::llround(double(k) * 1e6 / cfg_.fps));
}

std::uint64_t Participant::next_capture_us() const noexcept { return due_at(next_frame_); }

void Participant::skip_capture() {
  ++next_frame_;
  ++skipped_;
}

std::optional<WireMessage> Participant::capture_tick(std::uint64_t capture_true_us, std::uint64_t ready_true_us) {
  if (!media_on_ || capture_true_us < due_at(next_frame_)) return std::nullopt;
  // Boundaries already passed without a capture are skips.
  while (capture_true_us >= due_at(next_frame_ + 1)) skip_capture();
  ++next_frame_;

  const std::uint64_t capture_local = local_time(capture_true_us);
  Bytes bytes;
  try {
    capture::PointCloudFrame frame =
        capture::capture_point_cloud(cfg_.scene, cfg_.cam, std::int64_t(capture_true_us), cfg_.capture);
    frame.source_id = cfg_.member_id;
    frame.seq = media_seq_;
    frame.capture_ts_us = capture_local;
    bytes = codec::serialize(codec::encode_frame(frame, cfg_.codec));
  } catch (const Error&) {
    ++encode_errors_;
    return std::nullopt;
  }

  WireMessage m = make(MsgType::MediaPc, ready_true_us, std::move(bytes));
  m.seq = media_seq_++;
  sink_.self_view.push_back({m.seq, capture_local, local_time(ready_true_us)});
  ++published_;
  bytes_published_ += wire::kHeaderSize + m.payload.size();
  return m;
}

void Participant::apply_roster(const std::vector<wire::RosterEntry>& roster) {
  for (auto& [id, src] : sink_.sources) src.departed = true;
  for (const auto& e : roster) {
    if (e.member_id == cfg_.member_id) {
      seat_ = e.seat;
      continue;
    }
    SourceLog& src = sink_.sources[e.member_id];
    src.source_id = e.member_id;
    src.seat = e.seat;
    src.departed = false;
  }
}

std::map<std::uint32_t, std::uint8_t> Participant::remote_seats() const {
  std::map<std::uint32_t, std::uint8_t> out;
  for (const auto& [id, src] : sink_.sources)
    if (!src.departed && src.seat) out[id] = *src.seat;
  return out;
}

std::optional<MediaOutcome> Participant::on_message(const WireMessage& msg, std::uint64_t true_us) {
  try {
    switch (msg.type) {
      case MsgType::HelloAck:
        if (state_ == State::Greeting) state_ = State::Ready;
        return std::nullopt;
      case MsgType::CreateAck:
        created_session_ = wire::decode_u32(msg.payload);
        return std::nullopt;
      case MsgType::JoinAck: {
        const auto ack = wire::decode_join_ack(msg.payload);
        seat_ = ack.seat;
        apply_roster(ack.roster);
        state_ = State::Joined;
        next_periodic_us_ = true_us;
        return std::nullopt;
      }
      case MsgType::Roster:
        if (state_ == State::Joined) apply_roster(wire::decode_roster(msg.payload));
        return std::nullopt;
      case MsgType::Error: {
        errors_.push_back(wire::decode_error(msg.payload));
        if (state_ == State::Joining) state_ = State::Failed;
        return std::nullopt;
      }
      case MsgType::MediaPc:
        return on_media(msg, true_us);
      default:
        return std::nullopt;  // positions, audio: not rendered
    }
  } catch (const Error& e) {
    errors_.push_back({wire::ErrorCode::BadPayload, e.what()});
    return std::nullopt;
  }
}

MediaOutcome Participant::on_media(const WireMessage& msg, std::uint64_t true_us) {
  if (msg.sender_id == cfg_.member_id || state_ != State::Joined) return MediaOutcome::Rejected;
  SourceLog& src = sink_.sources[msg.sender_id];
  src.source_id = msg.sender_id;
  if (src.departed) return MediaOutcome::Rejected;

  if (src.last_seq && msg.seq <= *src.last_seq) {
    ++src.out_of_order;
    return MediaOutcome::OutOfOrder;
  }

  codec::EncodedFrame enc;
  try {
    enc = codec::parse_encoded_frame(msg.payload);
    if (enc.source_id != msg.sender_id || enc.seq != msg.seq)
      throw Error(Errc::HeaderError, "frame identity does not match the wire header");
    if (cfg_.decode_media) {
      std::optional<std::size_t> points = memo_ ? memo_->lookup(msg.sender_id, msg.seq, msg.payload) : std::nullopt;
      if (!points) {
        points = codec::decode_frame(enc).size();
        if (memo_) memo_->store(msg.sender_id, msg.seq, msg.payload, *points);
      }
    }
  } catch (const Error&) {
    ++src.decode_errors;
    return MediaOutcome::DecodeError;
  }

  if (src.last_seq && msg.seq > *src.last_seq + 1) src.seq_gaps += msg.seq - *src.last_seq - 1;
  src.last_seq = msg.seq;
  ++src.frames_received;
  src.bytes_received += wire::kHeaderSize + msg.payload.size();
  src.frames.push_back({msg.seq, enc.capture_ts_us, local_time(true_us)});
  return MediaOutcome::Rendered;
}

}  // namespace holo::client
