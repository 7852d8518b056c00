// SPDX-License-Identifier: Apache-2.0
//
// Session membership, seating, liveness and relay accounting. Pure state: no
// I/O, no clock of its own. Callers pass `now_us`.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "holo/wire/wire.hpp"

namespace holo::orch {

inline constexpr int kMinMembers = 2;
inline constexpr int kMaxMembers = 6;
inline constexpr std::uint64_t kDefaultHeartbeatTimeoutUs = 5'000'000;

using ConnId = std::uint64_t;

struct MemberState {
  std::uint32_t member_id = 0;
  std::uint8_t seat = 0;
  ConnId conn = 0;
  std::uint64_t last_heartbeat_us = 0;
  std::optional<wire::Position> position;
  std::optional<std::uint32_t> media_seq_high;
};

struct Session {
  std::uint32_t session_id = 0;
  int max_members = kMaxMembers;
  std::uint64_t created_ts_us = 0;
  std::map<std::uint32_t, MemberState> members;

  std::vector<wire::RosterEntry> roster() const;
};

struct StreamStats {
  std::uint64_t frames_in = 0;
  std::uint64_t frames_out = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  std::uint64_t drops = 0;
  friend bool operator==(const StreamStats&, const StreamStats&) = default;
};

/// Keyed by (session, sender).
using RelayStats = std::map<std::pair<std::uint32_t, std::uint32_t>, StreamStats>;

struct JoinResult {
  std::uint8_t seat = 0;
  std::vector<wire::RosterEntry> roster;  // includes the joiner
};

struct Expiry {
  std::uint32_t session_id = 0;
  std::uint32_t member_id = 0;
  bool session_destroyed = false;
};

class SessionManager {
 public:
  explicit SessionManager(std::uint64_t heartbeat_timeout_us = kDefaultHeartbeatTimeoutUs);

  /// ConfigError unless kMinMembers <= max_members <= kMaxMembers.
  std::uint32_t create_session(int max_members, std::uint64_t now_us);

  /// NoSuchSession, SessionFull or AlreadyJoined. Assigns the lowest free seat.
  JoinResult join(std::uint32_t session_id, std::uint32_t member_id, ConnId conn, std::uint64_t now_us);

  /// NoSuchSession or NotAMember. Returns true when the session was destroyed.
  bool leave(std::uint32_t session_id, std::uint32_t member_id);

  /// Recipients (every member but the sender, ascending id). Updates relay
  /// stats with `frame_bytes` per copy. NoSuchSession or NotAMember.
  std::vector<std::uint32_t> route_media(std::uint32_t session_id, std::uint32_t sender, std::uint32_t seq,
                                         std::size_t frame_bytes);

  /// As route_media, and stores the position.
  std::vector<std::uint32_t> route_position(std::uint32_t session_id, std::uint32_t sender,
                                            const wire::Position& pos);

  /// NoSuchSession or NotAMember. Liveness stamps never move backwards.
  void heartbeat(std::uint32_t session_id, std::uint32_t member_id, std::uint64_t now_us);

  /// Removes every member silent for longer than the timeout.
  std::vector<Expiry> heartbeat_tick(std::uint64_t now_us);

  void note_drop(std::uint32_t session_id, std::uint32_t sender);

  const Session* find(std::uint32_t session_id) const;
  const Session& get(std::uint32_t session_id) const;  // NoSuchSession
  const std::map<std::uint32_t, Session>& sessions() const noexcept { return sessions_; }
  const RelayStats& relay_stats() const noexcept { return stats_; }
  std::uint64_t heartbeat_timeout_us() const noexcept { return timeout_us_; }

 private:
  Session& session(std::uint32_t id);
  MemberState& member(Session& s, std::uint32_t member_id);
  std::vector<std::uint32_t> others(const Session& s, std::uint32_t sender) const;

  std::map<std::uint32_t, Session> sessions_;
  RelayStats stats_;
  std::uint32_t next_id_ = 1;
  std::uint64_t timeout_us_;
};

}  // namespace holo::orch
