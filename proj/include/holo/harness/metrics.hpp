// SPDX-License-Identifier: Apache-2.0
//
// Pure metric functions over logs. None of them look at clocks or sockets.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "holo/client/participant.hpp"

namespace holo::harness {

/// Linear interpolation between closest ranks (h = (n-1)q). Throws NoData on
/// an empty sample.
double quantile(std::vector<double> values, double q);

/// Sample mean and sample standard deviation (n-1); stdv is 0 for n == 1.
struct MeanStdv {
  double mean = 0;
  double stdv = 0;
};
MeanStdv mean_stdv(const std::vector<double>& values);

struct Delivery {
  std::uint64_t t_us = 0;
  std::uint64_t bytes = 0;
};

struct ThroughputSeries {
  std::uint64_t t0_us = 0;
  std::uint64_t window_us = 1'000'000;
  std::vector<std::uint64_t> window_bytes;
  std::vector<double> window_bps;
  std::size_t complete_windows = 0;  // leading windows that closed before end_us
  double mean_bps = 0;               // over complete windows (all windows if none closed)
  double stdv_bps = 0;
  double cov = 0;  // stdv / mean, 0 when mean is 0
};

/// Buckets deliveries at or after t0 into consecutive windows
/// [t0 + k*W, t0 + (k+1)*W). `end_us`, when set, extends the series to cover
/// [t0, end) even if trailing windows are empty. Deliveries before t0 are
/// not counted. Precondition: log sorted by t_us.
ThroughputSeries throughput_series(const std::vector<Delivery>& log, std::uint64_t t0_us,
                                   double window_s = 1.0, std::optional<std::uint64_t> end_us = {});

struct DelayTriple {
  double mean_ms = 0;
  double stdv_ms = 0;
  double p95_ms = 0;
  friend bool operator==(const DelayTriple&, const DelayTriple&) = default;
};

struct DelayStats {
  std::size_t count = 0;
  DelayTriple raw;        // local clocks taken at face value
  DelayTriple corrected;  // both offsets removed: true-time delay
  std::vector<double> raw_ms;
  std::vector<double> corrected_ms;
};

/// Pairs hold local clock readings; local = true + offset.
DelayStats delay_stats(const std::vector<client::FramePair>& pairs, std::int64_t sender_offset_us,
                       std::int64_t receiver_offset_us);

struct SkewStats {
  double max_ms = 0;
  double mean_ms = 0;
  std::size_t samples = 0;  // render events with at least two sources seen
};

/// Inter-stream skew at one receiver. `offsets` holds each source's clock
/// offset; sources missing from it count as 0. Capture times are corrected to
/// true time before comparison. Departed sources are left out. Throws NoData
/// with fewer than two sources or no event where two were live.
SkewStats skew_stats(const client::RenderSink& sink, const std::map<std::uint32_t, std::int64_t>& offsets,
                     std::int64_t receiver_offset_us);

}  // namespace holo::harness
