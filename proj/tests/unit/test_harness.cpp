// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "holo/common/error.hpp"
#include "holo/harness/scenario.hpp"
#include "holo/wire/socket.hpp"
#include "oracles/bucket_oracle.hpp"

using namespace holo;
using namespace holo::harness;

namespace {

LinkModel flat_link(std::uint64_t bps, std::uint64_t base = 0, std::uint64_t jitter = 0) {
  LinkModel l;
  l.bandwidth_bps = bps;
  l.base_delay_us = base;
  l.jitter_us = jitter;
  return l;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::size_t count_lines(const std::string& s) { return std::size_t(std::count(s.begin(), s.end(), '\n')); }

// Small scenes keep virtual runs fast; the pipeline is the same.
ScenarioConfig small_scenario(int participants, double seconds, std::uint64_t seed = 7) {
  ScenarioConfig c;
  c.participants = participants;
  c.duration_s = seconds;
  c.seed = seed;
  c.scene.target_points = 2000;
  c.service_mode = ServiceMode::Fixed;
  c.service.capture_us = 5'000;
  c.service.encode_us = 10'000;
  c.service.decode_us = 5'000;
  return c;
}

}  // namespace

// ---- link ----

TEST_CASE("zero-byte message arrives after exactly the base delay") {
  Link link(flat_link(8'000'000, 12'345), 1);
  CHECK(link.transfer(0, 1'000) == 1'000 + 12'345);
  CHECK(link.transfer(0, 5'000) == 5'000 + 12'345);
}

TEST_CASE("1 MB over 8 Mbps with a full bucket takes the oracle's 0.75 s") {
  Link link(flat_link(8'000'000), 1);
  const std::uint64_t t = link.transfer(1'000'000, 0);
  const auto oracle_done = oracle::bucket_completions({{0, 1'000'000}}, 8'000'000, kBucketMicros);
  CHECK(t == oracle_done[0]);
  // 8 Mbit total, 2 Mbit covered by the bucket, 6 Mbit at 8 Mbps.
  CHECK(t == 750'000);
  // A second megabyte right behind it has no bucket left: a full second.
  CHECK(link.transfer(1'000'000, 0) == 1'750'000);
}

TEST_CASE("token bucket agrees with the per-microsecond oracle on random traffic") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const std::uint64_t bps = std::uint64_t(rng.uniform_int(100'000, 4'000'000));
    std::vector<std::pair<std::uint64_t, std::uint64_t>> msgs;
    std::uint64_t t = std::uint64_t(rng.uniform_int(0, 100'000));
    for (int k = 0; k < 60; ++k) {
      t += std::uint64_t(rng.uniform_int(0, 40'000));
      msgs.emplace_back(t, std::uint64_t(rng.uniform_int(0, 9'000)));
    }
    const auto want = oracle::bucket_completions(msgs, bps, kBucketMicros);
    Link link(flat_link(bps), 5);
    for (std::size_t k = 0; k < msgs.size(); ++k) {
      CAPTURE(trial);
      CAPTURE(k);
      REQUIRE(link.transfer(msgs[k].second, msgs[k].first) == want[k]);
    }
  }
}

TEST_CASE("link delivery is in order and jitter stays within bounds") {
  Link link(flat_link(200'000'000, 10'000, 9'000), 3);
  std::uint64_t prev = 0;
  for (std::uint64_t t = 0; t < 2'000'000; t += 500) {
    const std::uint64_t d = link.transfer(100, t);
    CHECK(d >= prev);
    CHECK(d >= t + 1'000);
    CHECK(d <= std::max(prev, t + 19'000 + 1));
    prev = d;
  }
}

TEST_CASE("delivered bits over any 1 s window respect the cap") {
  const std::uint64_t bps = 8'000'000;
  Link link(flat_link(bps), 11);
  SplitMix64 rng(4);
  std::vector<Delivery> log;
  // Offer three times the capacity for 10 s in 1500-byte messages.
  for (std::uint64_t t = 0; t < 10'000'000; t += 500) log.push_back({link.transfer(1500, t), 1500});
  std::sort(log.begin(), log.end(), [](const Delivery& a, const Delivery& b) { return a.t_us < b.t_us; });

  const double window_bits = double(bps);
  const double bucket_bits = double(bps) * double(kBucketMicros) / 1e6;
  double worst_any = 0, worst_backlogged = 0;
  for (std::uint64_t w0 = 0; w0 + 1'000'000 <= 10'000'000; w0 += 10'000) {
    std::uint64_t bits = 0;
    for (const auto& d : log)
      if (d.t_us >= w0 && d.t_us < w0 + 1'000'000) bits += d.bytes * 8;
    worst_any = std::max(worst_any, double(bits));
    if (w0 >= kBucketMicros) worst_backlogged = std::max(worst_backlogged, double(bits));
  }
  // A full bucket can add its depth to the very first window.
  CHECK(worst_any <= window_bits + bucket_bits + 12'000);
  // Once the bucket has drained, the 1 % bound holds.
  CHECK(worst_backlogged <= window_bits * 1.01);
}

TEST_CASE("link model validation") {
  CHECK_THROWS_AS(Link(flat_link(0), 1), Error);
  LinkModel ok = flat_link(1);
  CHECK_NOTHROW(ok.validate());
}

// ---- metrics ----

TEST_CASE("constant 100 bytes every 100 ms is a flat 8 kbps series") {
  std::vector<Delivery> log;
  for (std::uint64_t t = 0; t < 10'000'000; t += 100'000) log.push_back({5'000'000 + t, 100});
  const ThroughputSeries s = throughput_series(log, 5'000'000, 1.0, 15'000'000);
  REQUIRE(s.window_bps.size() == 10);
  for (double b : s.window_bps) CHECK(b == doctest::Approx(8000.0));
  CHECK(s.mean_bps == doctest::Approx(8000.0));
  CHECK(s.stdv_bps == doctest::Approx(0.0));
  CHECK(s.complete_windows == 10);
}

TEST_CASE("empty log gives an empty series") {
  const ThroughputSeries s = throughput_series({}, 0);
  CHECK(s.window_bytes.empty());
  CHECK(s.mean_bps == 0);
}

TEST_CASE("window byte sums equal the total") {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Delivery> log;
    std::uint64_t t = 1000, total = 0;
    const int n = int(rng.uniform_int(0, 400));
    for (int k = 0; k < n; ++k) {
      t += std::uint64_t(rng.uniform_int(0, 80'000));
      const auto b = std::uint64_t(rng.uniform_int(0, 70'000));
      log.push_back({t, b});
      total += b;
    }
    const double w = rng.uniform(0.1, 2.0);
    const ThroughputSeries s = throughput_series(log, 1000, w);
    std::uint64_t sum = 0;
    for (auto b : s.window_bytes) sum += b;
    CHECK(sum == total);
  }
}

TEST_CASE("trailing partial windows are kept in the series but not in the statistics") {
  // Two full windows of 1000 bytes, then a stray delivery after the end.
  const std::vector<Delivery> log{{0, 1000}, {1'000'000, 1000}, {2'500'000, 5}};
  const ThroughputSeries s = throughput_series(log, 0, 1.0, 2'000'000);
  CHECK(s.window_bytes.size() == 3);
  CHECK(s.complete_windows == 2);
  CHECK(s.mean_bps == doctest::Approx(8000.0));
}

TEST_CASE("quantile interpolates between ranks") {
  CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({5}, 0.95) == 5);
  CHECK(quantile({3, 1, 2}, 0.0) == 1);
  CHECK(quantile({3, 1, 2}, 1.0) == 3);
  CHECK_THROWS_AS(quantile({}, 0.5), Error);
}

TEST_CASE("delay_stats: constant 150 ms pipeline") {
  std::vector<client::FramePair> pairs;
  for (std::uint32_t k = 0; k < 50; ++k) pairs.push_back({k, 1'000'000 + k * 66'667ull, 1'150'000 + k * 66'667ull});
  const DelayStats d = delay_stats(pairs, 0, 0);
  CHECK(d.count == 50);
  CHECK(d.corrected.mean_ms == doctest::Approx(150.0));
  CHECK(d.corrected.stdv_ms == doctest::Approx(0.0));
  CHECK(d.raw == d.corrected);
}

TEST_CASE("delay_stats: a +3 ms sender clock shifts raw by -3 ms only") {
  // Sender clock runs 3 ms ahead, so its capture stamps read 3 ms late.
  std::vector<client::FramePair> pairs;
  for (std::uint32_t k = 0; k < 20; ++k) {
    const std::uint64_t cap_true = 1'000'000 + k * 66'667ull;
    pairs.push_back({k, cap_true + 3'000, cap_true + 150'000});
  }
  const DelayStats d = delay_stats(pairs, 3'000, 0);
  CHECK(d.raw.mean_ms == doctest::Approx(147.0));
  CHECK(d.corrected.mean_ms == doctest::Approx(150.0));
}

TEST_CASE("delay_stats: p95 of 100..199 ms lands in the nearest-rank/interpolated band") {
  std::vector<client::FramePair> pairs;
  for (std::uint32_t k = 0; k < 100; ++k) pairs.push_back({k, 0, (100 + k) * 1000ull});
  const DelayStats d = delay_stats(pairs, 0, 0);
  CHECK(d.corrected.p95_ms >= 194.05 - 1e-9);
  CHECK(d.corrected.p95_ms <= 195.0);
  CHECK(d.corrected.p95_ms == doctest::Approx(194.05));
}

TEST_CASE("delay_stats on no pairs is NoData") {
  try {
    delay_stats({}, 0, 0);
    FAIL("expected NoData");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoData);
  }
}

TEST_CASE("skew_stats") {
  client::RenderSink sink;
  sink.sources[2].frames = {{0, 101'000, 50'000}, {1, 167'667, 117'000}};
  try {
    skew_stats(sink, {}, 0);
    FAIL("expected NoData");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoData);
  }
  // Second source lags 30 ms behind in capture time.
  sink.sources[3].frames = {{0, 71'000, 60'000}, {1, 137'667, 127'000}};
  SkewStats s = skew_stats(sink, {}, 0);
  // Events: src2@50 (one source), src3@60 -> 30, src2@117 -> 96.7, src3@127 -> 30.
  CHECK(s.samples == 3);
  CHECK(s.max_ms == doctest::Approx(96.667));
  CHECK(s.mean_ms == doctest::Approx((30.0 + 96.667 + 30.0) / 3).epsilon(1e-4));
  // Offsets are removed before comparing: a 30 ms fast clock at source 2 hides the lag.
  s = skew_stats(sink, {{2, 30'000}}, 0);
  CHECK(s.max_ms == doctest::Approx(66.667));
  sink.sources[3].departed = true;
  CHECK_THROWS_AS(skew_stats(sink, {}, 0), Error);
}

// ---- config ----

TEST_CASE("participants outside [2, 6] is a ConfigError") {
  for (int n : {0, 1, 7, 10}) {
    ScenarioConfig c;
    c.participants = n;
    CHECK_THROWS_AS(c.validate(), Error);
    try {
      run_virtual(c);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ConfigError);
    }
  }
  try {
    scenario_from_json({{"participants", 7}});
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConfigError);
  }
}

TEST_CASE("scenario config validation") {
  ScenarioConfig c;
  c.groups = {2, 2};
  CHECK_THROWS_AS(c.validate(), Error);  // sums to 4, participants is 2
  c.participants = 4;
  CHECK_NOTHROW(c.validate());
  c.duration_s = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.duration_s = 1;
  c.clock_offsets_us = {0, 0, 0};
  CHECK_THROWS_AS(c.validate(), Error);
  c.clock_offsets_us = {0, 0, 0, 60'000};
  CHECK_THROWS_AS(c.validate(), Error);
  c.clock_offsets_us.clear();
  c.links[9] = LinkModel{};
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("scenario JSON roundtrip and strictness") {
  ScenarioConfig c = small_scenario(4, 3.5, 12);
  c.groups = {2, 2};
  c.links[3] = flat_link(50'000'000, 40'000, 2'000);
  c.clock_offsets_us = {1, -2, 3, -4};
  c.codec.color_mode = codec::ColorMode::Raw;
  c.codec.octree_depth = 8;
  const nlohmann::json j = scenario_to_json(c);
  const ScenarioConfig back = scenario_from_json(j);
  CHECK(scenario_to_json(back) == j);
  CHECK(back.links.at(3) == c.links.at(3));
  CHECK(back.service == c.service);

  nlohmann::json bad = j;
  bad["colour"] = 1;
  CHECK_THROWS_AS(scenario_from_json(bad), Error);
  bad = j;
  bad["service"]["mode"] = "guess";
  CHECK_THROWS_AS(scenario_from_json(bad), Error);
  bad = j;
  bad["duration_s"] = "long";
  CHECK_THROWS_AS(scenario_from_json(bad), Error);

  // Overrides inherit from the default link.
  const ScenarioConfig partial = scenario_from_json(
      {{"participants", 3}, {"link", {{"jitter_us", 0}}}, {"links", {{{"member", 2}, {"base_delay_us", 7}}}}});
  CHECK(partial.links.at(2).jitter_us == 0);
  CHECK(partial.links.at(2).base_delay_us == 7);
  CHECK(partial.link_for(1).base_delay_us == LinkModel{}.base_delay_us);
}

TEST_CASE("reference-calibration resolves to its own links and a labelled preset") {
  ScenarioConfig c;
  c.service_mode = ServiceMode::ReferenceCalibration;
  c.link = flat_link(1'000'000, 1);
  const ResolvedScenario r = resolve(c);
  CHECK(r.service == reference_calibration_service());
  CHECK(r.cfg.link == reference_calibration_link());
  CHECK(r.label.find("calibrated, not predictive") != std::string::npos);
}

// ---- scenarios ----

TEST_CASE("four participants give twelve delay rows and reconcile") {
  const RunResult r = run_virtual(small_scenario(4, 3.0));
  CHECK(r.report.delays.size() == 12);
  CHECK(r.report.streams.size() == 4);
  CHECK(r.report.checks == Checks{true, true, true, true});
  for (const auto& d : r.report.delays) {
    CHECK(d.sender != d.receiver);
    CHECK(d.frames > 40);
    CHECK(d.seq_gaps == 0);
    CHECK(d.out_of_order == 0);
    CHECK(d.decode_errors == 0);
  }
  for (const auto& s : r.report.streams) {
    CHECK(s.published == 45);
    CHECK(s.skipped == 0);
  }
}

TEST_CASE("virtual runs are deterministic") {
  const ScenarioConfig c = small_scenario(2, 2.0, 7);
  const std::string a = report_to_json(run_virtual(c).report).dump();
  const std::string b = report_to_json(run_virtual(c).report).dump();
  CHECK(a == b);
  ScenarioConfig other = c;
  other.seed = 8;
  CHECK(report_to_json(run_virtual(other).report).dump() != a);
}

TEST_CASE("fixed pipeline delay adds up") {
  ScenarioConfig c = small_scenario(2, 2.0);
  c.link = flat_link(200'000'000, 50'000, 0);
  c.service.capture_us = 0;
  c.service.encode_us = 30'000;
  c.service.decode_us = 20'000;
  const RunResult r = run_virtual(c);
  CHECK(r.report.summary.delay_corrected.mean_ms == doctest::Approx(150.0));
  CHECK(r.report.summary.delay_corrected.stdv_ms == doctest::Approx(0.0));
}

TEST_CASE("raw and corrected delay differ by exactly the injected offsets") {
  ScenarioConfig c = small_scenario(3, 2.0);
  c.clock_offsets_us = {3'000, -2'000, 0};
  const RunResult shifted = run_virtual(c);
  c.clock_offsets_us = {0, 0, 0};
  const RunResult plain = run_virtual(c);
  REQUIRE(shifted.report.delays.size() == plain.report.delays.size());
  for (std::size_t k = 0; k < plain.report.delays.size(); ++k) {
    const DelayRow& s = shifted.report.delays[k];
    const DelayRow& p = plain.report.delays[k];
    const double expect = double(s.receiver_offset_us - s.sender_offset_us) / 1000.0;
    CHECK(s.raw.mean_ms - s.corrected.mean_ms == doctest::Approx(expect));
    CHECK(s.corrected.mean_ms == doctest::Approx(p.corrected.mean_ms));
  }
}

TEST_CASE("skew with identical pipelines stays within a frame period") {
  ScenarioConfig c = small_scenario(3, 3.0);
  c.link = flat_link(200'000'000, 5'000, 0);
  const RunResult r = run_virtual(c);
  for (const auto& k : r.report.skew) {
    REQUIRE(k.available);
    CHECK(k.max_ms <= 1000.0 / 15.0 + 1e-6);
  }
}

TEST_CASE("an extra 100 ms on one uplink shows up as about 100 ms of skew") {
  ScenarioConfig c = small_scenario(3, 3.0);
  c.link = flat_link(200'000'000, 5'000, 0);
  LinkModel slow = c.link;
  slow.base_delay_us += 100'000;
  c.links[1] = slow;
  const RunResult r = run_virtual(c);
  // Receivers 2 and 3 see source 1 late relative to the other remote source.
  for (const auto& k : r.report.skew) {
    if (k.receiver == 1) continue;
    REQUIRE(k.available);
    CHECK(k.max_ms >= 100.0 - 1000.0 / 15.0);
    CHECK(k.max_ms <= 100.0 + 1000.0 / 15.0);
  }
}

TEST_CASE("two sessions side by side stay separate") {
  ScenarioConfig c = small_scenario(5, 2.0);
  c.groups = {3, 2};
  const RunResult r = run_virtual(c);
  CHECK(r.report.checks == Checks{true, true, true, true});
  CHECK(r.report.delays.size() == 3 * 2 + 2 * 1);
  for (const auto& a : r.log.arrivals) CHECK(r.log.member_session.at(a.receiver) == a.session);
}

TEST_CASE("an overloaded encoder skips frames instead of queueing") {
  ScenarioConfig c = small_scenario(2, 2.0);
  c.service.encode_us = 100'000;  // longer than the 66.7 ms frame period
  const RunResult r = run_virtual(c);
  for (const auto& s : r.report.streams) {
    CHECK(s.skipped > 0);
    CHECK(s.published + s.skipped == 30);
  }
  CHECK(r.report.checks.sent_equals_ingress);
}

// ---- report files ----

TEST_CASE("report roundtrip, CSV row counts and idempotent writes") {
  const RunResult r = run_virtual(small_scenario(3, 2.0));
  const nlohmann::json j = report_to_json(r.report);
  CHECK(report_from_json(nlohmann::json::parse(j.dump())) == r.report);

  const auto dir = std::filesystem::temp_directory_path() / "holo_report_test";
  std::filesystem::remove_all(dir);
  write_report(r.report, dir.string());
  const std::string summary = slurp(dir / "summary.json");
  const std::string delays = slurp(dir / "delays.csv");
  const std::string thr = slurp(dir / "throughput.csv");
  CHECK(read_report(dir.string()) == r.report);

  std::size_t pairs = 0, windows = 0;
  for (const auto& d : r.report.delays) pairs += d.samples.size();
  for (const auto& s : r.report.streams) windows += s.window_bytes.size();
  CHECK(count_lines(delays) == pairs + 1);
  CHECK(count_lines(thr) == windows + 1);
  CHECK(delays.rfind("sender,receiver,seq,delay_ms_raw,delay_ms_corrected\n", 0) == 0);

  write_report(r.report, dir.string());
  CHECK(slurp(dir / "summary.json") == summary);
  CHECK(slurp(dir / "delays.csv") == delays);
  CHECK(slurp(dir / "throughput.csv") == thr);
  std::filesystem::remove_all(dir);

  CHECK_THROWS_AS(write_report(r.report, "/proc/holo-cannot-write-here"), Error);
  CHECK_THROWS_AS(read_report("/nonexistent-holo-dir"), Error);
}

TEST_CASE("report parser rejects missing fields") {
  nlohmann::json j = report_to_json(run_virtual(small_scenario(2, 1.0)).report);
  j.erase("streams");
  CHECK_THROWS_AS(report_from_json(j), Error);
}

// ---- real sockets ----

TEST_CASE("realtime run over loopback reconciles") {
  ScenarioConfig c = small_scenario(2, 1.5);
  c.clock_mode = ClockMode::Realtime;
  const RunResult r = run_scenario(c);
  CHECK(r.report.clock_mode == "realtime");
  CHECK(r.report.checks == Checks{true, true, true, true});
  for (const auto& d : r.report.delays) {
    CHECK(d.frames > 10);
    CHECK(d.corrected.mean_ms > 0);
  }
}

TEST_CASE("realtime run against a dead endpoint is a ScenarioError") {
  ScenarioConfig c = small_scenario(2, 1.0);
  c.clock_mode = ClockMode::Realtime;
  c.orchestrator_host = "127.0.0.1";
  {
    wire::Socket s = wire::listen_tcp("127.0.0.1", 0);
    c.orchestrator_port = wire::local_port(s);
  }  // closed again: nothing listens there now
  try {
    run_scenario(c);
    FAIL("expected ScenarioError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ScenarioError);
  }
}
