// SPDX-License-Identifier: Apache-2.0
#include "holo/orchestrator/session.hpp"

#include <algorithm>
#include <string>

#include "holo/common/error.hpp"

namespace holo::orch {

std::vector<wire::RosterEntry> Session::roster() const {
  std::vector<wire::RosterEntry> out;
  out.reserve(members.size());
  for (const auto& [id, m] : members) out.push_back({id, m.seat});
  return out;
}

SessionManager::SessionManager(std::uint64_t heartbeat_timeout_us) : timeout_us_(heartbeat_timeout_us) {
  if (timeout_us_ == 0) throw Error(Errc::ConfigError, "heartbeat timeout must be positive");
}

std::uint32_t SessionManager::create_session(int max_members, std::uint64_t now_us) {
  if (max_members < kMinMembers || max_members > kMaxMembers)
    throw Error(Errc::ConfigError, "max_members must be in [2, 6], got " + std::to_string(max_members));
  // Ids are never reused within one manager; 0 stays reserved for "unassigned".
  const std::uint32_t id = next_id_++;
  Session s;
  s.session_id = id;
  s.max_members = max_members;
  s.created_ts_us = now_us;
  sessions_.emplace(id, std::move(s));
  return id;
}

Session& SessionManager::session(std::uint32_t id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(Errc::NoSuchSession, "session " + std::to_string(id) + " does not exist");
  return it->second;
}

const Session* SessionManager::find(std::uint32_t id) const {
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : &it->second;
}

const Session& SessionManager::get(std::uint32_t id) const {
  return const_cast<SessionManager*>(this)->session(id);
}

MemberState& SessionManager::member(Session& s, std::uint32_t member_id) {
  auto it = s.members.find(member_id);
  if (it == s.members.end())
    throw Error(Errc::NotAMember,
                "member " + std::to_string(member_id) + " is not in session " + std::to_string(s.session_id));
  return it->second;
}

JoinResult SessionManager::join(std::uint32_t session_id, std::uint32_t member_id, ConnId conn,
                                std::uint64_t now_us) {
  Session& s = session(session_id);
  if (s.members.count(member_id))
    throw Error(Errc::AlreadyJoined, "member " + std::to_string(member_id) + " already in session");
  if (int(s.members.size()) >= s.max_members)
    throw Error(Errc::SessionFull, "session " + std::to_string(session_id) + " is full");

  std::vector<bool> taken(std::size_t(s.max_members), false);
  for (const auto& [id, m] : s.members) taken[m.seat] = true;
  const auto seat = static_cast<std::uint8_t>(std::find(taken.begin(), taken.end(), false) - taken.begin());

  MemberState m;
  m.member_id = member_id;
  m.seat = seat;
  m.conn = conn;
  m.last_heartbeat_us = now_us;
  s.members.emplace(member_id, m);
  return {seat, s.roster()};
}

bool SessionManager::leave(std::uint32_t session_id, std::uint32_t member_id) {
  Session& s = session(session_id);
  member(s, member_id);
  s.members.erase(member_id);
  if (!s.members.empty()) return false;
  sessions_.erase(session_id);
  return true;
}

std::vector<std::uint32_t> SessionManager::others(const Session& s, std::uint32_t sender) const {
  std::vector<std::uint32_t> out;
  out.reserve(s.members.size());
  for (const auto& [id, m] : s.members)
    if (id != sender) out.push_back(id);
  return out;
}

std::vector<std::uint32_t> SessionManager::route_media(std::uint32_t session_id, std::uint32_t sender,
                                                       std::uint32_t seq, std::size_t frame_bytes) {
  Session& s = session(session_id);
  MemberState& m = member(s, sender);
  if (!m.media_seq_high || seq > *m.media_seq_high) m.media_seq_high = seq;
  auto recipients = others(s, sender);
  StreamStats& st = stats_[{session_id, sender}];
  st.frames_in += 1;
  st.bytes_in += frame_bytes;
  st.frames_out += recipients.size();
  st.bytes_out += recipients.size() * frame_bytes;
  return recipients;
}

std::vector<std::uint32_t> SessionManager::route_position(std::uint32_t session_id, std::uint32_t sender,
                                                          const wire::Position& pos) {
  Session& s = session(session_id);
  member(s, sender).position = pos;
  return others(s, sender);
}

void SessionManager::heartbeat(std::uint32_t session_id, std::uint32_t member_id, std::uint64_t now_us) {
  MemberState& m = member(session(session_id), member_id);
  m.last_heartbeat_us = std::max(m.last_heartbeat_us, now_us);
}

std::vector<Expiry> SessionManager::heartbeat_tick(std::uint64_t now_us) {
  std::vector<Expiry> expired;
  for (const auto& [sid, s] : sessions_)
    for (const auto& [mid, m] : s.members)
      if (now_us > m.last_heartbeat_us && now_us - m.last_heartbeat_us > timeout_us_) expired.push_back({sid, mid});
  for (auto& e : expired) e.session_destroyed = leave(e.session_id, e.member_id);
  return expired;
}

void SessionManager::note_drop(std::uint32_t session_id, std::uint32_t sender) {
  stats_[{session_id, sender}].drops += 1;
}

}  // namespace holo::orch
