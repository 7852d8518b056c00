// SPDX-License-Identifier: Apache-2.0
#include "holo/harness/report.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "holo/common/error.hpp"

namespace holo::client {

// Samples are stored as compact [seq, capture_ts_us, render_ts_us] triples.
void to_json(nlohmann::json& j, const FramePair& p) { j = nlohmann::json::array({p.seq, p.capture_ts_us, p.render_ts_us}); }
void from_json(const nlohmann::json& j, FramePair& p) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::ConfigError, "frame sample must be a 3-element array");
  p.seq = j.at(0).get<std::uint32_t>();
  p.capture_ts_us = j.at(1).get<std::uint64_t>();
  p.render_ts_us = j.at(2).get<std::uint64_t>();
}

}  // namespace holo::client

namespace holo::harness {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DelayTriple, mean_ms, stdv_ms, p95_ms)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ServiceTimes, capture_us, encode_us, decode_us, decode_load_us, decoder_threads,
                                   shared_worker)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(StreamReport, sender, session, published, skipped, encode_errors, bytes_sent,
                                   bytes_ingress, frames_ingress, window_us, window_bytes, window_bps,
                                   complete_windows, mean_bps, stdv_bps, cov)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DelayRow, sender, receiver, session, frames, seq_gaps, out_of_order, decode_errors,
                                   bytes_received, sender_offset_us, receiver_offset_us, raw, corrected, samples)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SkewRow, receiver, available, max_ms, mean_ms, samples)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RelayRow, session, sender, frames_in, frames_out, bytes_in, bytes_out, drops)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ClientRow, member, session, seat, clock_offset_us, published, skipped,
                                   self_view_frames, errors)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Checks, sent_equals_ingress, relay_fanout, window_sums, receive_counts)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Summary, mean_bitrate_bps, delay_samples, delay_raw, delay_corrected)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MetricsReport, delay_definition, service_label, clock_mode, config, seed, service,
                                   media_start_us, media_end_us, summary, checks, streams, delays, skew, relay,
                                   clients)

void ServiceTimes::validate() const {
  if (decoder_threads < 1 || decoder_threads > 64) throw Error(Errc::ConfigError, "decoder_threads must be in [1, 64]");
  constexpr std::uint64_t kMax = 10'000'000;
  if (capture_us > kMax || encode_us > kMax || decode_us > kMax || decode_load_us > kMax)
    throw Error(Errc::ConfigError, "service time above 10 s");
}

nlohmann::json service_to_json(const ServiceTimes& s) { return s; }

ServiceTimes service_from_json(const nlohmann::json& j) {
  try {
    ServiceTimes s = j.get<ServiceTimes>();
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, std::string("service times: ") + e.what());
  }
}

nlohmann::json report_to_json(const MetricsReport& r) { return r; }

MetricsReport report_from_json(const nlohmann::json& j) {
  try {
    return j.get<MetricsReport>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, std::string("report: ") + e.what());
  }
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + p.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error(Errc::IoError, "write failed: " + p.string());
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string throughput_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << "window_start_s,sender,session,bytes,bps\n";
  for (const auto& s : r.streams) {
    for (std::size_t k = 0; k < s.window_bytes.size(); ++k) {
      os << fmt("%.6f", double(k * s.window_us) / 1e6) << ',' << s.sender << ',' << s.session << ','
         << s.window_bytes[k] << ',' << fmt("%.3f", s.window_bps[k]) << '\n';
    }
  }
  return os.str();
}

std::string delays_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << "sender,receiver,seq,delay_ms_raw,delay_ms_corrected\n";
  for (const auto& d : r.delays) {
    for (const auto& p : d.samples) {
      const std::int64_t raw = std::int64_t(p.render_ts_us) - std::int64_t(p.capture_ts_us);
      const std::int64_t corr = raw - d.receiver_offset_us + d.sender_offset_us;
      os << d.sender << ',' << d.receiver << ',' << p.seq << ',' << fmt("%.3f", double(raw) / 1000.0) << ','
         << fmt("%.3f", double(corr) / 1000.0) << '\n';
    }
  }
  return os.str();
}

void write_report(const MetricsReport& r, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + out_dir + ": " + ec.message());
  const fs::path dir(out_dir);
  write_file(dir / "summary.json", report_to_json(r).dump(2) + "\n");
  write_file(dir / "throughput.csv", throughput_csv(r));
  write_file(dir / "delays.csv", delays_csv(r));
}

MetricsReport read_report(const std::string& in_dir) {
  const auto path = std::filesystem::path(in_dir) / "summary.json";
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  try {
    return report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ConfigError, path.string() + ": " + e.what());
  }
}

void print_summary(const MetricsReport& r, std::ostream& os) {
  const auto flags = os.flags();
  os << std::fixed << std::setprecision(1);
  os << "clock: " << r.clock_mode << "   seed: " << r.seed << "\n";
  os << "service: " << r.service_label << "  (capture " << r.service.capture_us / 1000.0 << " ms, encode "
     << r.service.encode_us / 1000.0 << " ms, decode " << r.service.decode_us / 1000.0 << " ms)\n";
  os << "delay: " << r.delay_definition << "\n\n";

  os << "stream  session  published  skipped    mean Mbps   stdv Mbps   CoV\n";
  for (const auto& s : r.streams) {
    os << std::setw(6) << s.sender << std::setw(9) << s.session << std::setw(11) << s.published << std::setw(9)
       << s.skipped << std::setw(13) << std::setprecision(3) << s.mean_bps / 1e6 << std::setw(12) << s.stdv_bps / 1e6
       << std::setw(6) << std::setprecision(2) << s.cov << std::setprecision(1) << "\n";
  }
  os << "\nsender -> receiver   frames   mean ms   stdv ms    p95 ms   raw mean ms\n";
  for (const auto& d : r.delays) {
    os << std::setw(6) << d.sender << " -> " << std::setw(8) << d.receiver << std::setw(9) << d.frames << std::setw(10)
       << d.corrected.mean_ms << std::setw(10) << d.corrected.stdv_ms << std::setw(10) << d.corrected.p95_ms
       << std::setw(14) << d.raw.mean_ms << "\n";
  }
  os << "\nreceiver   max skew ms   mean skew ms\n";
  for (const auto& k : r.skew) {
    os << std::setw(8) << k.receiver;
    if (k.available) os << std::setw(14) << k.max_ms << std::setw(15) << k.mean_ms << "\n";
    else os << "           n/a            n/a\n";
  }
  os << "\nmean bitrate " << std::setprecision(3) << r.summary.mean_bitrate_bps / 1e6 << " Mbps, mean delay "
     << std::setprecision(1) << r.summary.delay_corrected.mean_ms << " ms (stdv " << r.summary.delay_corrected.stdv_ms
     << ", p95 " << r.summary.delay_corrected.p95_ms << ") over " << r.summary.delay_samples << " frames\n";
  os << "checks: sent=ingress " << (r.checks.sent_equals_ingress ? "ok" : "FAIL") << ", relay fan-out "
     << (r.checks.relay_fanout ? "ok" : "FAIL") << ", window sums " << (r.checks.window_sums ? "ok" : "FAIL")
     << ", receive counts " << (r.checks.receive_counts ? "ok" : "FAIL") << "\n";
  os.flags(flags);
}

}  // namespace holo::harness
