// SPDX-License-Identifier: Apache-2.0
#include "report_build.hpp"

#include "holo/common/error.hpp"

namespace holo::harness::detail {

MetricsReport build_report(const ResolvedScenario& rs, std::uint64_t media_start_us, std::uint64_t media_end_us,
                           const std::vector<ClientOutcome>& clients, const orch::RelayStats& relay) {
  const ScenarioConfig& cfg = rs.cfg;
  MetricsReport r;
  r.delay_definition = "capture to decode complete at the receiver (no display stage)";
  r.service_label = rs.label;
  r.clock_mode = std::string(clock_mode_name(cfg.clock_mode));
  r.config = scenario_to_json(cfg);
  r.seed = cfg.seed;
  r.service = rs.service;
  r.media_start_us = media_start_us;
  r.media_end_us = media_end_us;

  std::map<std::uint32_t, const ClientOutcome*> by_id;
  std::map<std::uint32_t, std::int64_t> offsets;
  std::map<std::uint32_t, std::size_t> session_size;
  for (const auto& c : clients) {
    by_id[c.member] = &c;
    offsets[c.member] = c.offset_us;
    ++session_size[c.session];
  }

  bool sent_ok = true, windows_ok = true;
  double bitrate_sum = 0;
  for (const auto& c : clients) {
    StreamReport s;
    s.sender = c.member;
    s.session = c.session;
    s.published = c.published;
    s.skipped = c.skipped;
    s.encode_errors = c.encode_errors;
    s.bytes_sent = c.bytes_sent;
    for (const auto& d : c.ingress) s.bytes_ingress += d.bytes;
    s.frames_ingress = c.ingress.size();
    const ThroughputSeries ts = throughput_series(c.ingress, media_start_us, cfg.window_s, media_end_us);
    s.window_us = ts.window_us;
    s.window_bytes = ts.window_bytes;
    s.window_bps = ts.window_bps;
    s.complete_windows = ts.complete_windows;
    s.mean_bps = ts.mean_bps;
    s.stdv_bps = ts.stdv_bps;
    s.cov = ts.cov;
    std::uint64_t window_total = 0;
    for (auto b : s.window_bytes) window_total += b;
    sent_ok = sent_ok && s.bytes_sent == s.bytes_ingress && s.published == s.frames_ingress;
    windows_ok = windows_ok && window_total == s.bytes_ingress;
    bitrate_sum += s.mean_bps;
    r.streams.push_back(std::move(s));
  }
  r.summary.mean_bitrate_bps = clients.empty() ? 0 : bitrate_sum / double(clients.size());

  std::vector<double> pooled_raw, pooled_corr;
  // received[(session, sender)] = frames seen by every receiver together
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> received;
  for (const auto& rc : clients) {
    for (const auto& [src, log] : rc.sink.sources) {
      DelayRow d;
      d.sender = src;
      d.receiver = rc.member;
      d.session = rc.session;
      d.frames = log.frames_received;
      d.seq_gaps = log.seq_gaps;
      d.out_of_order = log.out_of_order;
      d.decode_errors = log.decode_errors;
      d.bytes_received = log.bytes_received;
      d.sender_offset_us = offsets.count(src) ? offsets.at(src) : 0;
      d.receiver_offset_us = rc.offset_us;
      d.samples = log.frames;
      received[{rc.session, src}] += log.frames_received + log.out_of_order + log.decode_errors;
      if (!log.frames.empty()) {
        const DelayStats ds = delay_stats(log.frames, d.sender_offset_us, d.receiver_offset_us);
        d.raw = ds.raw;
        d.corrected = ds.corrected;
        pooled_raw.insert(pooled_raw.end(), ds.raw_ms.begin(), ds.raw_ms.end());
        pooled_corr.insert(pooled_corr.end(), ds.corrected_ms.begin(), ds.corrected_ms.end());
      }
      r.delays.push_back(std::move(d));
    }
  }
  std::sort(r.delays.begin(), r.delays.end(),
            [](const DelayRow& a, const DelayRow& b) { return std::pair(a.sender, a.receiver) < std::pair(b.sender, b.receiver); });
  r.summary.delay_samples = pooled_corr.size();
  if (!pooled_corr.empty()) {
    const auto mr = mean_stdv(pooled_raw), mc = mean_stdv(pooled_corr);
    r.summary.delay_raw = {mr.mean, mr.stdv, quantile(pooled_raw, 0.95)};
    r.summary.delay_corrected = {mc.mean, mc.stdv, quantile(pooled_corr, 0.95)};
  }

  for (const auto& c : clients) {
    SkewRow k;
    k.receiver = c.member;
    try {
      const SkewStats s = skew_stats(c.sink, offsets, c.offset_us);
      k.available = true;
      k.max_ms = s.max_ms;
      k.mean_ms = s.mean_ms;
      k.samples = s.samples;
    } catch (const Error& e) {
      if (e.code() != Errc::NoData) throw;
    }
    r.skew.push_back(k);
  }

  bool fanout_ok = true, counts_ok = true;
  for (const auto& [key, st] : relay) {
    RelayRow row{key.first, key.second, st.frames_in, st.frames_out, st.bytes_in, st.bytes_out, st.drops};
    const std::uint64_t others = session_size.count(key.first) ? session_size.at(key.first) - 1 : 0;
    fanout_ok = fanout_ok && st.bytes_out == st.bytes_in * others && st.frames_out == st.frames_in * others;
    counts_ok = counts_ok && st.frames_out == received[key];
    r.relay.push_back(row);
  }
  // A stream the relay never saw still has to match what receivers report.
  for (const auto& [key, n] : received)
    if (!relay.count(key) && n != 0) counts_ok = false;
  r.checks = {sent_ok, fanout_ok, windows_ok, counts_ok};

  for (const auto& c : clients) {
    r.clients.push_back({c.member, c.session, c.seat, c.offset_us, c.published, c.skipped,
                         std::uint64_t(c.sink.self_view.size()), c.errors});
  }
  return r;
}

}  // namespace holo::harness::detail
