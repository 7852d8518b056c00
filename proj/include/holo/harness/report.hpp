// SPDX-License-Identifier: Apache-2.0
//
// MetricsReport and its on-disk forms. summary.json holds everything; the two
// CSVs are flat views of the same data.
//
// throughput.csv columns: window_start_s, sender, session, bytes, bps
//   one row per (sender, window), senders ascending, windows in time order.
// delays.csv columns: sender, receiver, seq, delay_ms_raw, delay_ms_corrected
//   one row per rendered frame, rows grouped by (sender, receiver) ascending,
//   frames in render order.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "holo/client/participant.hpp"
#include "holo/harness/metrics.hpp"
#include "json.hpp"

namespace holo::harness {

struct ServiceTimes {
  std::uint64_t capture_us = 0;      // camera to point cloud, pipelined
  std::uint64_t encode_us = 0;       // single encoder per client
  std::uint64_t decode_us = 0;       // per frame per decoder thread
  std::uint64_t decode_load_us = 0;  // extra per frame for each remote source beyond the first
  int decoder_threads = 1;
  // true: capture, encode and decode share one sequential worker per client,
  // so inbound streams contend with the client's own publishing.
  // false: pipelined capture, one encoder, and a separate decoder pool.
  bool shared_worker = false;

  void validate() const;  // ConfigError
  friend bool operator==(const ServiceTimes&, const ServiceTimes&) = default;
};

struct StreamReport {
  std::uint32_t sender = 0;
  std::uint32_t session = 0;
  std::uint64_t published = 0;
  std::uint64_t skipped = 0;
  std::uint64_t encode_errors = 0;
  std::uint64_t bytes_sent = 0;     // client side, whole MEDIA_PC messages
  std::uint64_t bytes_ingress = 0;  // arrived at the orchestrator
  std::uint64_t frames_ingress = 0;
  std::uint64_t window_us = 0;
  std::vector<std::uint64_t> window_bytes;
  std::vector<double> window_bps;
  std::uint64_t complete_windows = 0;
  double mean_bps = 0;
  double stdv_bps = 0;
  double cov = 0;
  friend bool operator==(const StreamReport&, const StreamReport&) = default;
};

struct DelayRow {
  std::uint32_t sender = 0;
  std::uint32_t receiver = 0;
  std::uint32_t session = 0;
  std::uint64_t frames = 0;
  std::uint64_t seq_gaps = 0;
  std::uint64_t out_of_order = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t bytes_received = 0;
  std::int64_t sender_offset_us = 0;
  std::int64_t receiver_offset_us = 0;
  DelayTriple raw;
  DelayTriple corrected;
  std::vector<client::FramePair> samples;  // local clock readings
  friend bool operator==(const DelayRow&, const DelayRow&) = default;
};

struct SkewRow {
  std::uint32_t receiver = 0;
  bool available = false;  // false when fewer than two sources rendered
  double max_ms = 0;
  double mean_ms = 0;
  std::uint64_t samples = 0;
  friend bool operator==(const SkewRow&, const SkewRow&) = default;
};

struct RelayRow {
  std::uint32_t session = 0;
  std::uint32_t sender = 0;
  std::uint64_t frames_in = 0;
  std::uint64_t frames_out = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  std::uint64_t drops = 0;
  friend bool operator==(const RelayRow&, const RelayRow&) = default;
};

struct ClientRow {
  std::uint32_t member = 0;
  std::uint32_t session = 0;
  int seat = -1;
  std::int64_t clock_offset_us = 0;
  std::uint64_t published = 0;
  std::uint64_t skipped = 0;
  std::uint64_t self_view_frames = 0;
  std::uint64_t errors = 0;
  friend bool operator==(const ClientRow&, const ClientRow&) = default;
};

/// Reconciliation results computed at the end of a run.
struct Checks {
  bool sent_equals_ingress = false;       // per sender: client bytes == orchestrator ingress
  bool relay_fanout = false;              // per stream: bytes_out == bytes_in * (members - 1)
  bool window_sums = false;               // per stream: sum(window bytes) == bytes_ingress
  bool receive_counts = false;            // per stream: frames_out == sum of receiver frame counts
  friend bool operator==(const Checks&, const Checks&) = default;
};

struct Summary {
  double mean_bitrate_bps = 0;  // average of per-stream means
  std::uint64_t delay_samples = 0;
  DelayTriple delay_raw;        // pooled over every (sender, receiver) sample
  DelayTriple delay_corrected;
  friend bool operator==(const Summary&, const Summary&) = default;
};

struct MetricsReport {
  std::string delay_definition;
  std::string service_label;
  std::string clock_mode;
  nlohmann::json config;  // resolved scenario, as run
  std::uint64_t seed = 0;
  ServiceTimes service;
  std::uint64_t media_start_us = 0;
  std::uint64_t media_end_us = 0;
  Summary summary;
  Checks checks;
  std::vector<StreamReport> streams;
  std::vector<DelayRow> delays;
  std::vector<SkewRow> skew;
  std::vector<RelayRow> relay;
  std::vector<ClientRow> clients;
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

nlohmann::json service_to_json(const ServiceTimes& s);
ServiceTimes service_from_json(const nlohmann::json& j);  // ConfigError

nlohmann::json report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::json& j);  // ConfigError on missing or mistyped fields

/// Writes summary.json, throughput.csv and delays.csv. Creates the directory
/// if needed. IoError on failure.
void write_report(const MetricsReport& r, const std::string& out_dir);
MetricsReport read_report(const std::string& in_dir);

std::string throughput_csv(const MetricsReport& r);
std::string delays_csv(const MetricsReport& r);

/// Human-readable table for the CLI.
void print_summary(const MetricsReport& r, std::ostream& os);

}  // namespace holo::harness
