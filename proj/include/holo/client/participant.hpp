// SPDX-License-Identifier: Apache-2.0
//
// Simulated participant. Transport- and scheduler-agnostic: the caller says
// when things happen (in true time) and moves the returned messages. The
// participant converts true time to its own skewed local clock for every
// timestamp it writes.
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "holo/codec/codec.hpp"
#include "holo/wire/wire.hpp"

namespace holo::client {

inline constexpr std::int64_t kMaxClockOffsetUs = 50'000;
inline constexpr std::int64_t kDefaultOffsetBoundUs = 3'000;

struct ParticipantConfig {
  std::uint32_t member_id = 1;
  capture::SceneConfig scene;
  capture::CameraModel cam = capture::default_camera(scene);
  capture::CaptureOptions capture;
  codec::CodecConfig codec;
  double fps = 15.0;
  std::int64_t clock_offset_us = 0;  // local = true + offset
  std::uint64_t heartbeat_interval_us = 1'000'000;
  bool decode_media = true;  // false: header-only accounting

  void validate() const;  // ConfigError
};

/// Uniform in [-bound, bound] from a stream independent of every other draw.
std::int64_t draw_clock_offset(std::uint64_t seed, std::uint32_t member_id,
                               std::int64_t bound_us = kDefaultOffsetBoundUs);

/// Both timestamps are local clock readings: capture at the sender, render
/// at the receiver.
struct FramePair {
  std::uint32_t seq = 0;
  std::uint64_t capture_ts_us = 0;
  std::uint64_t render_ts_us = 0;
  friend bool operator==(const FramePair&, const FramePair&) = default;
};

struct SourceLog {
  std::uint32_t source_id = 0;
  std::optional<std::uint8_t> seat;
  bool departed = false;  // stats frozen, kept for the report
  std::optional<std::uint32_t> last_seq;
  std::uint64_t frames_received = 0;
  std::uint64_t seq_gaps = 0;  // frames missing between consecutive seqs
  std::uint64_t out_of_order = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t bytes_received = 0;
  std::vector<FramePair> frames;
};

struct RenderSink {
  std::map<std::uint32_t, SourceLog> sources;
  std::vector<FramePair> self_view;
};

/// Shares decode outcomes between in-process receivers of the same relayed
/// frame. Lookups compare the full payload, so a hit is exact.
class DecodeMemo {
 public:
  std::optional<std::size_t> lookup(std::uint32_t sender, std::uint32_t seq, ByteView payload) const;
  void store(std::uint32_t sender, std::uint32_t seq, ByteView payload, std::size_t points);

 private:
  struct Entry {
    std::uint32_t seq;
    Bytes payload;
    std::size_t points;
  };
  std::map<std::uint32_t, std::deque<Entry>> by_sender_;
};

enum class State { Idle, Greeting, Ready, Joining, Joined, Left, Failed };
std::string_view state_name(State s) noexcept;

enum class MediaOutcome { Rendered, OutOfOrder, DecodeError, Rejected };

class Participant {
 public:
  explicit Participant(ParticipantConfig cfg);

  std::uint64_t local_time(std::uint64_t true_us) const noexcept;

  // ---- signaling ----
  wire::WireMessage hello(std::uint64_t true_us);
  wire::WireMessage create(std::uint8_t max_members, std::uint64_t true_us);
  wire::WireMessage join(std::uint32_t session_id, std::uint64_t true_us);
  wire::WireMessage leave(std::uint64_t true_us);

  /// HEARTBEAT and POSITION messages due at `true_us` while joined.
  std::vector<wire::WireMessage> periodic(std::uint64_t true_us);

  // ---- capture ----
  /// Arms the cadence: frame k is due at first_capture + k / fps.
  void start_media(std::uint64_t first_capture_true_us);
  void stop_media() noexcept { media_on_ = false; }
  bool media_on() const noexcept { return media_on_; }
  std::uint64_t next_capture_us() const noexcept;

  /// Declines the due frame (encoder busy). Advances the cadence.
  void skip_capture();

  /// Captures and encodes the frame due at or before `capture_true_us`,
  /// stamps capture time from the local clock and feeds the self view at
  /// `ready_true_us`. Returns nullopt when nothing is due or encoding fails.
  std::optional<wire::WireMessage> capture_tick(std::uint64_t capture_true_us, std::uint64_t ready_true_us);

  // ---- inbound ----
  /// Non-media messages update signaling state. Media is decoded and
  /// recorded as rendered at `true_us`.
  std::optional<MediaOutcome> on_message(const wire::WireMessage& msg, std::uint64_t true_us);

  void set_decode_memo(std::shared_ptr<DecodeMemo> memo) { memo_ = std::move(memo); }

  // ---- observation ----
  const ParticipantConfig& config() const noexcept { return cfg_; }
  std::uint32_t id() const noexcept { return cfg_.member_id; }
  State state() const noexcept { return state_; }
  std::uint32_t session_id() const noexcept { return session_id_; }
  std::optional<std::uint8_t> seat() const noexcept { return seat_; }
  std::map<std::uint32_t, std::uint8_t> remote_seats() const;
  const RenderSink& sink() const noexcept { return sink_; }
  std::uint64_t published() const noexcept { return published_; }
  std::uint64_t skipped() const noexcept { return skipped_; }
  std::uint64_t encode_errors() const noexcept { return encode_errors_; }
  std::uint64_t bytes_published() const noexcept { return bytes_published_; }
  const std::vector<wire::ErrorPayload>& errors() const noexcept { return errors_; }
  std::optional<std::uint32_t> created_session() const noexcept { return created_session_; }

 private:
  wire::WireMessage make(wire::MsgType type, std::uint64_t true_us, Bytes payload = {});
  std::uint64_t due_at(std::uint64_t k) const noexcept;
  void apply_roster(const std::vector<wire::RosterEntry>& roster);
  MediaOutcome on_media(const wire::WireMessage& msg, std::uint64_t true_us);
  wire::Position seat_position() const;

  ParticipantConfig cfg_;
  State state_ = State::Idle;
  std::uint32_t session_id_ = 0;
  std::optional<std::uint32_t> created_session_;
  std::optional<std::uint8_t> seat_;
  std::map<std::uint8_t, std::uint32_t> type_seq_;
  RenderSink sink_;
  std::shared_ptr<DecodeMemo> memo_;
  std::vector<wire::ErrorPayload> errors_;

  bool media_on_ = false;
  std::uint64_t media_origin_us_ = 0;
  std::uint64_t next_frame_ = 0;  // cadence index
  std::uint32_t media_seq_ = 0;
  std::uint64_t published_ = 0;
  std::uint64_t skipped_ = 0;
  std::uint64_t encode_errors_ = 0;
  std::uint64_t bytes_published_ = 0;
  std::uint64_t next_periodic_us_ = 0;
};

}  // namespace holo::client
