// SPDX-License-Identifier: Apache-2.0
#include "holo/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "holo/common/error.hpp"

namespace holo::harness {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(Errc::NoData, "quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(Errc::ConfigError, "quantile outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = double(values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - double(lo)) * (values[hi] - values[lo]);
}

MeanStdv mean_stdv(const std::vector<double>& values) {
  MeanStdv r;
  if (values.empty()) return r;
  double sum = 0;
  for (double v : values) sum += v;
  r.mean = sum / double(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.stdv = std::sqrt(ss / double(values.size() - 1));
  }
  return r;
}

ThroughputSeries throughput_series(const std::vector<Delivery>& log, std::uint64_t t0_us, double window_s,
                                   std::optional<std::uint64_t> end_us) {
  if (!(window_s > 0)) throw Error(Errc::ConfigError, "window must be positive");
  ThroughputSeries s;
  s.t0_us = t0_us;
  s.window_us = static_cast<std::uint64_t>(std::llround(window_s * 1e6));
  if (s.window_us == 0) throw Error(Errc::ConfigError, "window below 1 us");

  std::size_t n = 0;
  if (end_us && *end_us > t0_us) n = static_cast<std::size_t>((*end_us - t0_us + s.window_us - 1) / s.window_us);
  for (const auto& d : log)
    if (d.t_us >= t0_us) n = std::max<std::size_t>(n, static_cast<std::size_t>((d.t_us - t0_us) / s.window_us) + 1);

  s.window_bytes.assign(n, 0);
  for (const auto& d : log)
    if (d.t_us >= t0_us) s.window_bytes[(d.t_us - t0_us) / s.window_us] += d.bytes;

  const double secs = double(s.window_us) / 1e6;
  s.window_bps.reserve(n);
  for (auto b : s.window_bytes) s.window_bps.push_back(double(b) * 8.0 / secs);

  if (end_us) {
    s.complete_windows = *end_us > t0_us ? std::min<std::size_t>(n, (*end_us - t0_us) / s.window_us) : 0;
  } else {
    s.complete_windows = n;
  }
  const std::size_t used = s.complete_windows ? s.complete_windows : n;
  const MeanStdv ms = mean_stdv(std::vector<double>(s.window_bps.begin(), s.window_bps.begin() + std::ptrdiff_t(used)));
  s.mean_bps = ms.mean;
  s.stdv_bps = ms.stdv;
  s.cov = ms.mean > 0 ? ms.stdv / ms.mean : 0.0;
  return s;
}

namespace {

DelayTriple triple(const std::vector<double>& v) {
  const MeanStdv ms = mean_stdv(v);
  return {ms.mean, ms.stdv, quantile(v, 0.95)};
}

}  // namespace

DelayStats delay_stats(const std::vector<client::FramePair>& pairs, std::int64_t sender_offset_us,
                       std::int64_t receiver_offset_us) {
  if (pairs.empty()) throw Error(Errc::NoData, "no frame pairs");
  DelayStats d;
  d.count = pairs.size();
  d.raw_ms.reserve(pairs.size());
  d.corrected_ms.reserve(pairs.size());
  for (const auto& p : pairs) {
    const std::int64_t raw = std::int64_t(p.render_ts_us) - std::int64_t(p.capture_ts_us);
    // (render - r_off) - (capture - s_off)
    const std::int64_t corr = raw - receiver_offset_us + sender_offset_us;
    d.raw_ms.push_back(double(raw) / 1000.0);
    d.corrected_ms.push_back(double(corr) / 1000.0);
  }
  d.raw = triple(d.raw_ms);
  d.corrected = triple(d.corrected_ms);
  return d;
}

SkewStats skew_stats(const client::RenderSink& sink, const std::map<std::uint32_t, std::int64_t>& offsets,
                     std::int64_t receiver_offset_us) {
  // (render true time, source, corrected capture time)
  std::vector<std::tuple<std::int64_t, std::uint32_t, std::int64_t>> events;
  std::size_t live_sources = 0;
  for (const auto& [src, log] : sink.sources) {
    if (log.departed) continue;
    ++live_sources;
    const auto it = offsets.find(src);
    const std::int64_t off = it == offsets.end() ? 0 : it->second;
    for (const auto& p : log.frames)
      events.emplace_back(std::int64_t(p.render_ts_us) - receiver_offset_us, src, std::int64_t(p.capture_ts_us) - off);
  }
  if (live_sources < 2) throw Error(Errc::NoData, "skew needs at least two sources");
  std::sort(events.begin(), events.end());

  std::map<std::uint32_t, std::int64_t> latest;
  SkewStats s;
  double sum = 0;
  for (const auto& [t, src, cap] : events) {
    latest[src] = cap;
    if (latest.size() < 2) continue;
    std::int64_t lo = latest.begin()->second, hi = lo;
    for (const auto& [_, c] : latest) {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    const double k = double(hi - lo) / 1000.0;
    s.max_ms = std::max(s.max_ms, k);
    sum += k;
    ++s.samples;
  }
  if (s.samples == 0) throw Error(Errc::NoData, "no render event with two live sources");
  s.mean_ms = sum / double(s.samples);
  return s;
}

}  // namespace holo::harness
