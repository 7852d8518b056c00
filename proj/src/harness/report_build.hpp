// SPDX-License-Identifier: Apache-2.0
//
// Shared by both runners: turns end-of-run state into a MetricsReport.
#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "holo/harness/scenario.hpp"

namespace holo::harness::detail {

struct ClientOutcome {
  std::uint32_t member = 0;
  std::uint32_t session = 0;
  int seat = -1;
  std::int64_t offset_us = 0;
  std::uint64_t published = 0;
  std::uint64_t skipped = 0;
  std::uint64_t encode_errors = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t errors = 0;
  client::RenderSink sink;          // snapshot taken before LEAVE
  std::vector<Delivery> ingress;    // MEDIA_PC arrivals at the orchestrator, time-sorted
};

MetricsReport build_report(const ResolvedScenario& rs, std::uint64_t media_start_us, std::uint64_t media_end_us,
                           const std::vector<ClientOutcome>& clients, const orch::RelayStats& relay);

}  // namespace holo::harness::detail
