// SPDX-License-Identifier: Apache-2.0
#include "holo/orchestrator/orchestrator.hpp"

#include <fstream>

#include "holo/common/error.hpp"

namespace holo::orch {

using wire::ErrorCode;
using wire::MsgType;
using wire::WireMessage;

void OrchestratorConfig::validate() const {
  if (max_members < kMinMembers || max_members > kMaxMembers)
    throw Error(Errc::ConfigError, "max_members must be in [2, 6]");
  if (heartbeat_timeout_ms == 0) throw Error(Errc::ConfigError, "heartbeat_timeout_ms must be positive");
}

OrchestratorConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigError, "orchestrator config must be a JSON object");
  OrchestratorConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "listen_port") c.listen_port = value.get<std::uint16_t>();
      else if (key == "max_members") c.max_members = value.get<int>();
      else if (key == "heartbeat_timeout_ms") c.heartbeat_timeout_ms = value.get<std::uint64_t>();
      else throw Error(Errc::ConfigError, "unknown orchestrator config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  c.validate();
  return c;
}

nlohmann::json config_to_json(const OrchestratorConfig& c) {
  return {{"listen_port", c.listen_port}, {"max_members", c.max_members}, {"heartbeat_timeout_ms", c.heartbeat_timeout_ms}};
}

OrchestratorConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ConfigError, path + ": " + e.what());
  }
}

Orchestrator::Orchestrator(OrchestratorConfig cfg)
    : cfg_((cfg.validate(), cfg)), sessions_(cfg.heartbeat_timeout_ms * 1000) {}

SharedBytes Orchestrator::make(MsgType type, std::uint32_t session_id, Bytes payload, std::uint64_t now_us) {
  WireMessage m;
  m.type = type;
  m.session_id = session_id;
  m.sender_id = 0;
  m.seq = seq_by_type_[static_cast<std::uint32_t>(type)]++;
  m.send_ts_us = now_us;
  m.payload = std::move(payload);
  return std::make_shared<const Bytes>(wire::encode_message(m));
}

void Orchestrator::send_error(Out& out, ConnId conn, std::uint32_t session_id, ErrorCode code,
                              const std::string& text, std::uint64_t now_us) {
  out.push_back({conn, make(MsgType::Error, session_id, wire::encode_error({code, text}), now_us)});
}

void Orchestrator::broadcast_roster(Out& out, std::uint32_t session_id, std::uint64_t now_us) {
  const Session* s = sessions_.find(session_id);
  if (!s) return;
  const SharedBytes frame = make(MsgType::Roster, session_id, wire::encode_roster(s->roster()), now_us);
  for (const auto& [id, m] : s->members) out.push_back({m.conn, frame});
}

void Orchestrator::relay(Out& out, const WireMessage& msg, const SharedBytes& raw,
                         const std::vector<std::uint32_t>& to, std::uint64_t now_us) {
  const Session& s = sessions_.get(msg.session_id);
  for (std::uint32_t id : to) out.push_back({s.members.at(id).conn, raw});
  if (route_hook_) route_hook_({now_us, msg.session_id, msg.sender_id, msg.seq, msg.type, raw->size(), to});
}

void Orchestrator::log(nlohmann::json j, std::uint64_t now_us) {
  if (!log_) return;
  j["ts_us"] = now_us;
  log_(j);
}

void Orchestrator::depart(Out& out, std::uint32_t session_id, std::uint32_t member_id, const char* reason,
                          std::uint64_t now_us) {
  const bool destroyed = sessions_.leave(session_id, member_id);
  log({{"event", reason}, {"session", session_id}, {"member", member_id}, {"session_destroyed", destroyed}}, now_us);
  broadcast_roster(out, session_id, now_us);
}

namespace {

ErrorCode wire_code(Errc c) {
  switch (c) {
    case Errc::NoSuchSession: return ErrorCode::NoSuchSession;
    case Errc::SessionFull: return ErrorCode::SessionFull;
    case Errc::AlreadyJoined: return ErrorCode::AlreadyJoined;
    case Errc::NotAMember: return ErrorCode::NotAMember;
    case Errc::ConfigError: return ErrorCode::Config;
    case Errc::ProtocolError: return ErrorCode::BadPayload;
    default: return ErrorCode::Protocol;
  }
}

}  // namespace

void Orchestrator::reject(Out& out, ConnId conn, const WireMessage& msg, const std::string& why,
                          std::uint64_t now_us) {
  send_error(out, conn, msg.session_id, ErrorCode::Protocol, why, now_us);
  log({{"event", "error"}, {"conn", conn}, {"type", wire::type_name(msg.type)}, {"member", msg.sender_id},
       {"session", msg.session_id}, {"detail", why}},
      now_us);
}

std::vector<Outbound> Orchestrator::on_message(ConnId conn, const WireMessage& msg, SharedBytes raw,
                                               std::uint64_t now_us) {
  Out out;
  try {
    handle(out, conn, msg, raw, now_us);
  } catch (const Error& e) {
    send_error(out, conn, msg.session_id, wire_code(e.code()), e.what(), now_us);
    log({{"event", "error"}, {"conn", conn}, {"type", wire::type_name(msg.type)}, {"member", msg.sender_id},
         {"session", msg.session_id}, {"detail", e.what()}},
        now_us);
  }
  return out;
}

void Orchestrator::handle(Out& out, ConnId conn, const WireMessage& msg, const SharedBytes& raw,
                          std::uint64_t now_us) {
  if (msg.type == MsgType::Hello) {
    conn_member_[conn] = msg.sender_id;
    out.push_back({conn, make(MsgType::HelloAck, 0, {}, now_us)});
    log({{"event", "hello"}, {"conn", conn}, {"member", msg.sender_id}}, now_us);
    return;
  }
  auto bound = conn_member_.find(conn);
  if (bound == conn_member_.end()) return reject(out, conn, msg, "HELLO required before other messages", now_us);
  if (bound->second != msg.sender_id)
    return reject(out, conn, msg, "sender_id does not match the connection's HELLO", now_us);
  const std::uint32_t member = msg.sender_id;

  switch (msg.type) {
    case MsgType::Create: {
      const int max = msg.payload.empty() ? cfg_.max_members : wire::decode_u8(msg.payload);
      const std::uint32_t id = sessions_.create_session(max, now_us);
      out.push_back({conn, make(MsgType::CreateAck, id, wire::encode_u32(id), now_us)});
      log({{"event", "session_created"}, {"session", id}, {"max_members", max}, {"member", member}}, now_us);
      return;
    }
    case MsgType::Join: {
      const JoinResult r = sessions_.join(msg.session_id, member, conn, now_us);
      out.push_back({conn, make(MsgType::JoinAck, msg.session_id, wire::encode_join_ack({r.seat, r.roster}), now_us)});
      const SharedBytes roster = make(MsgType::Roster, msg.session_id, wire::encode_roster(r.roster), now_us);
      for (const auto& [id, m] : sessions_.get(msg.session_id).members)
        if (id != member) out.push_back({m.conn, roster});
      log({{"event", "join"}, {"session", msg.session_id}, {"member", member}, {"seat", r.seat}}, now_us);
      return;
    }
    case MsgType::Leave:
      depart(out, msg.session_id, member, "leave", now_us);
      return;
    case MsgType::MediaPc:
    case MsgType::MediaAudio:
      relay(out, msg, raw, sessions_.route_media(msg.session_id, member, msg.seq, raw->size()), now_us);
      return;
    case MsgType::Position:
      relay(out, msg, raw, sessions_.route_position(msg.session_id, member, wire::decode_position(msg.payload)),
            now_us);
      return;
    case MsgType::Heartbeat:
      sessions_.heartbeat(msg.session_id, member, now_us);
      return;
    default:
      return reject(out, conn, msg, "clients may not send " + std::string(wire::type_name(msg.type)), now_us);
  }
}

std::vector<Outbound> Orchestrator::on_disconnect(ConnId conn, std::uint64_t now_us) {
  Out out;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> gone;
  for (const auto& [sid, s] : sessions_.sessions())
    for (const auto& [mid, m] : s.members)
      if (m.conn == conn) gone.emplace_back(sid, mid);
  for (const auto& [sid, mid] : gone) depart(out, sid, mid, "disconnect", now_us);
  conn_member_.erase(conn);
  // Frames addressed to the closed connection itself are pointless.
  std::erase_if(out, [conn](const Outbound& o) { return o.conn == conn; });
  return out;
}

std::vector<Outbound> Orchestrator::tick(std::uint64_t now_us) {
  Out out;
  for (const Expiry& e : sessions_.heartbeat_tick(now_us)) {
    log({{"event", "expire"}, {"session", e.session_id}, {"member", e.member_id},
         {"session_destroyed", e.session_destroyed}},
        now_us);
    const Session* s = sessions_.find(e.session_id);
    if (!s) continue;
    const SharedBytes err =
        make(MsgType::Error, e.session_id,
             wire::encode_error({ErrorCode::PeerTimeout, "member " + std::to_string(e.member_id) + " timed out"}),
             now_us);
    for (const auto& [id, m] : s->members) out.push_back({m.conn, err});
    broadcast_roster(out, e.session_id, now_us);
  }
  return out;
}

void Orchestrator::note_drop(std::uint32_t session_id, std::uint32_t sender) { sessions_.note_drop(session_id, sender); }

void Orchestrator::log_stats_snapshot(std::uint64_t now_us) {
  if (!log_) return;
  nlohmann::json streams = nlohmann::json::array();
  for (const auto& [key, st] : sessions_.relay_stats())
    streams.push_back({{"session", key.first}, {"sender", key.second}, {"frames_in", st.frames_in},
                       {"frames_out", st.frames_out}, {"bytes_in", st.bytes_in}, {"bytes_out", st.bytes_out},
                       {"drops", st.drops}});
  log({{"event", "relay_stats"}, {"streams", streams}}, now_us);
}

}  // namespace holo::orch
