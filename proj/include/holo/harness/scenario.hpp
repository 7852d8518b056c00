// SPDX-License-Identifier: Apache-2.0
//
// Scenario description, service-time model and the runners.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "holo/capture/capture.hpp"
#include "holo/codec/codec.hpp"
#include "holo/harness/link.hpp"
#include "holo/harness/report.hpp"
#include "holo/orchestrator/orchestrator.hpp"
#include "json.hpp"

namespace holo::harness {

enum class ClockMode { Virtual, Realtime };

// measured: micro-benchmark of the real pipeline on this host (default).
// fixed: the times given in the config.
// reference-calibration: per-stage budgets and links fitted so the two- and
//   four-user sessions land near the published delay figures. Calibrated, not
//   predictive: it checks the measurement plumbing, nothing more.
enum class ServiceMode { Measured, Fixed, ReferenceCalibration };

std::string_view clock_mode_name(ClockMode m) noexcept;
std::string_view service_mode_name(ServiceMode m) noexcept;

struct ScenarioConfig {
  int participants = 2;
  std::vector<int> groups;  // session sizes, summing to participants; empty = one session
  double duration_s = 10.0;
  std::uint64_t seed = 1;
  double fps = 15.0;
  capture::SceneConfig scene;  // scene.seed is replaced per participant
  codec::CodecConfig codec;
  LinkModel link;                            // every client, both directions
  std::map<std::uint32_t, LinkModel> links;  // per-member override
  ClockMode clock_mode = ClockMode::Virtual;
  std::string orchestrator_host;  // REALTIME only; empty = in-process server
  std::uint16_t orchestrator_port = 0;
  ServiceMode service_mode = ServiceMode::Measured;
  ServiceTimes service;                      // used when service_mode is fixed
  std::vector<std::int64_t> clock_offsets_us;  // per member in id order; empty = drawn from the seed
  std::int64_t clock_offset_bound_us = 3'000;
  std::uint64_t heartbeat_timeout_ms = 5'000;
  double window_s = 1.0;
  // random: each client's capture clock starts at a seeded offset within one
  // frame period. aligned: all start together, which removes phase luck when
  // comparing runs that differ only in participant count.
  bool aligned_capture = false;

  void validate() const;  // ConfigError
  std::vector<int> session_sizes() const;
  LinkModel link_for(std::uint32_t member) const;
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);  // ConfigError
nlohmann::json scenario_to_json(const ScenarioConfig& c);
ScenarioConfig load_scenario(const std::string& path);  // IoError, ConfigError

nlohmann::json codec_to_json(const codec::CodecConfig& c);
codec::CodecConfig codec_from_json(const nlohmann::json& j);

ServiceTimes reference_calibration_service();
LinkModel reference_calibration_link();

/// Median per-stage times of the real pipeline on this host, rounded to
/// 100 us. Memoized per (scene, codec) for the life of the process.
ServiceTimes measure_service_times(const capture::SceneConfig& scene, const codec::CodecConfig& codec);

/// Resolves the service mode, and for reference-calibration also the links.
/// Returns the config as it will run plus the label for the report.
struct ResolvedScenario {
  ScenarioConfig cfg;
  ServiceTimes service;
  std::string label;
};
ResolvedScenario resolve(const ScenarioConfig& cfg);

// ---- event log, for exhaustive relay checks ----
struct PublishRecord {
  std::uint64_t t_us;
  std::uint32_t sender;
  std::uint32_t session;
  std::uint32_t seq;
};
struct ArrivalRecord {
  std::uint64_t t_us;
  std::uint32_t receiver;
  std::uint32_t sender;
  std::uint32_t session;
  std::uint32_t seq;
};
struct EventLog {
  std::vector<PublishRecord> published;    // MEDIA_PC leaving a client
  std::vector<orch::RouteRecord> routes;   // relay decisions at the orchestrator
  std::vector<ArrivalRecord> arrivals;     // MEDIA_PC reaching a client
  std::map<std::uint32_t, std::uint32_t> member_session;
};

struct RunResult {
  MetricsReport report;
  EventLog log;
};

/// Runs a scenario in the mode named by cfg.clock_mode.
RunResult run_scenario(const ScenarioConfig& cfg);
RunResult run_virtual(const ScenarioConfig& cfg);
RunResult run_realtime(const ScenarioConfig& cfg);

}  // namespace holo::harness
