// SPDX-License-Identifier: Apache-2.0
//
// Message-level orchestrator: turns inbound wire messages into outbound
// frames. Transport-agnostic; the TCP server and the simulator both drive it.
//
// A connection binds to a member id with HELLO (sender_id). Media and
// position frames are forwarded verbatim: the receiver sees the original
// header, including the sender's id and seq.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "holo/orchestrator/session.hpp"
#include "holo/wire/wire.hpp"

namespace holo::orch {

struct OrchestratorConfig {
  std::uint16_t listen_port = wire::kDefaultPort;
  int max_members = kMaxMembers;  // used when CREATE carries no size
  std::uint64_t heartbeat_timeout_ms = 5000;

  void validate() const;  // ConfigError
};

OrchestratorConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const OrchestratorConfig& c);
OrchestratorConfig load_config(const std::string& path);  // IoError, ConfigError

using SharedBytes = std::shared_ptr<const Bytes>;

struct Outbound {
  ConnId conn = 0;
  SharedBytes bytes;
};

/// One relay decision, for audits of fan-out and ordering.
struct RouteRecord {
  std::uint64_t at_us = 0;
  std::uint32_t session_id = 0;
  std::uint32_t sender_id = 0;
  std::uint32_t seq = 0;
  wire::MsgType type = wire::MsgType::MediaPc;
  std::size_t bytes = 0;
  std::vector<std::uint32_t> recipients;
};

class Orchestrator {
 public:
  explicit Orchestrator(OrchestratorConfig cfg = {});

  /// `raw` is the frame exactly as received; relayed frames share it.
  std::vector<Outbound> on_message(ConnId conn, const wire::WireMessage& msg, SharedBytes raw, std::uint64_t now_us);

  /// Members bound to a closed connection leave their sessions.
  std::vector<Outbound> on_disconnect(ConnId conn, std::uint64_t now_us);

  /// Liveness sweep.
  std::vector<Outbound> tick(std::uint64_t now_us);

  /// A relayed frame could not be handed to its recipient's transport.
  void note_drop(std::uint32_t session_id, std::uint32_t sender);

  /// Emits a relay_stats log line.
  void log_stats_snapshot(std::uint64_t now_us);

  void set_log_sink(std::function<void(const nlohmann::json&)> sink) { log_ = std::move(sink); }
  void set_route_hook(std::function<void(const RouteRecord&)> hook) { route_hook_ = std::move(hook); }

  const SessionManager& sessions() const noexcept { return sessions_; }
  const OrchestratorConfig& config() const noexcept { return cfg_; }

 private:
  using Out = std::vector<Outbound>;

  SharedBytes make(wire::MsgType type, std::uint32_t session_id, Bytes payload, std::uint64_t now_us);
  void send_error(Out& out, ConnId conn, std::uint32_t session_id, wire::ErrorCode code, const std::string& text,
                  std::uint64_t now_us);
  void broadcast_roster(Out& out, std::uint32_t session_id, std::uint64_t now_us);
  void relay(Out& out, const wire::WireMessage& msg, const SharedBytes& raw, const std::vector<std::uint32_t>& to,
             std::uint64_t now_us);
  void reject(Out& out, ConnId conn, const wire::WireMessage& msg, const std::string& why, std::uint64_t now_us);
  void handle(Out& out, ConnId conn, const wire::WireMessage& msg, const SharedBytes& raw, std::uint64_t now_us);
  void depart(Out& out, std::uint32_t session_id, std::uint32_t member_id, const char* reason, std::uint64_t now_us);
  void log(nlohmann::json j, std::uint64_t now_us);

  OrchestratorConfig cfg_;
  SessionManager sessions_;
  std::map<ConnId, std::uint32_t> conn_member_;            // HELLO binding
  std::map<std::uint32_t, std::uint32_t> seq_by_type_;     // own outbound numbering
  std::function<void(const nlohmann::json&)> log_;
  std::function<void(const RouteRecord&)> route_hook_;
};

}  // namespace holo::orch
