// SPDX-License-Identifier: Apache-2.0
#include "holo/harness/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>

#include "holo/common/error.hpp"

namespace holo::harness {

using nlohmann::json;

std::string_view clock_mode_name(ClockMode m) noexcept {
  return m == ClockMode::Virtual ? "virtual" : "realtime";
}

std::string_view service_mode_name(ServiceMode m) noexcept {
  switch (m) {
    case ServiceMode::Measured: return "measured";
    case ServiceMode::Fixed: return "fixed";
    case ServiceMode::ReferenceCalibration: return "reference-calibration";
  }
  return "?";
}

void ScenarioConfig::validate() const {
  if (participants < orch::kMinMembers || participants > orch::kMaxMembers)
    throw Error(Errc::ConfigError, "participants must be in [2, 6], got " + std::to_string(participants));
  if (!groups.empty()) {
    for (int g : groups)
      if (g < orch::kMinMembers || g > orch::kMaxMembers) throw Error(Errc::ConfigError, "group size must be in [2, 6]");
    if (std::accumulate(groups.begin(), groups.end(), 0) != participants)
      throw Error(Errc::ConfigError, "group sizes must sum to participants");
  }
  if (!(duration_s > 0) || duration_s > 3600) throw Error(Errc::ConfigError, "duration_s must be in (0, 3600]");
  if (!(fps > 0) || fps > 120) throw Error(Errc::ConfigError, "fps must be in (0, 120]");
  if (!(window_s > 0) || window_s > 3600) throw Error(Errc::ConfigError, "window_s must be in (0, 3600]");
  scene.validate();
  codec.validate();
  link.validate();
  for (const auto& [id, l] : links) {
    if (id < 1 || id > std::uint32_t(participants)) throw Error(Errc::ConfigError, "link override for unknown member");
    l.validate();
  }
  if (!clock_offsets_us.empty() && clock_offsets_us.size() != std::size_t(participants))
    throw Error(Errc::ConfigError, "clock_offsets_us needs one entry per participant");
  for (auto o : clock_offsets_us)
    if (o < -client::kMaxClockOffsetUs || o > client::kMaxClockOffsetUs)
      throw Error(Errc::ConfigError, "clock offset beyond 50 ms");
  if (clock_offset_bound_us < 0 || clock_offset_bound_us > client::kMaxClockOffsetUs)
    throw Error(Errc::ConfigError, "clock_offset_bound_us must be in [0, 50000]");
  if (heartbeat_timeout_ms == 0) throw Error(Errc::ConfigError, "heartbeat_timeout_ms must be positive");
  service.validate();
}

std::vector<int> ScenarioConfig::session_sizes() const {
  return groups.empty() ? std::vector<int>{participants} : groups;
}

LinkModel ScenarioConfig::link_for(std::uint32_t member) const {
  const auto it = links.find(member);
  return it == links.end() ? link : it->second;
}

// ---- JSON ----

namespace {

json link_to_json(const LinkModel& l) {
  return {{"base_delay_us", l.base_delay_us}, {"jitter_us", l.jitter_us}, {"bandwidth_bps", l.bandwidth_bps}};
}

LinkModel link_from_json(const json& j, LinkModel l) {
  if (!j.is_object()) throw Error(Errc::ConfigError, "link must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "base_delay_us") l.base_delay_us = v.get<std::uint64_t>();
    else if (k == "jitter_us") l.jitter_us = v.get<std::uint64_t>();
    else if (k == "bandwidth_bps") l.bandwidth_bps = v.get<std::uint64_t>();
    else if (k != "member") throw Error(Errc::ConfigError, "unknown link key '" + k + "'");
  }
  return l;
}

json scene_to_json(const capture::SceneConfig& s) {
  return {{"target_points", s.target_points}, {"motion_amplitude", s.motion_amplitude},
          {"camera_distance", s.camera_distance}};
}

capture::SceneConfig scene_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigError, "scene must be an object");
  capture::SceneConfig s;
  for (const auto& [k, v] : j.items()) {
    if (k == "target_points") s.target_points = v.get<int>();
    else if (k == "motion_amplitude") s.motion_amplitude = v.get<double>();
    else if (k == "camera_distance") s.camera_distance = v.get<double>();
    else throw Error(Errc::ConfigError, "unknown scene key '" + k + "'");
  }
  return s;
}

ServiceMode service_mode_from(const std::string& s) {
  if (s == "measured") return ServiceMode::Measured;
  if (s == "fixed") return ServiceMode::Fixed;
  if (s == "reference-calibration") return ServiceMode::ReferenceCalibration;
  throw Error(Errc::ConfigError, "unknown service mode '" + s + "'");
}

}  // namespace

json codec_to_json(const codec::CodecConfig& c) {
  return {{"octree_depth", c.octree_depth},
          {"bbox_policy", c.bbox_policy == codec::BboxPolicy::Fixed ? "fixed" : "per-frame"},
          {"bbox_center", {c.fixed_bbox.center.x, c.fixed_bbox.center.y, c.fixed_bbox.center.z}},
          {"bbox_side", c.fixed_bbox.side},
          {"color_mode", c.color_mode == codec::ColorMode::Raw ? "raw" : "quant"},
          {"luma_bits", c.quant.luma_bits},
          {"chroma_bits", c.quant.chroma_bits}};
}

codec::CodecConfig codec_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigError, "codec must be an object");
  codec::CodecConfig c;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "octree_depth") c.octree_depth = v.get<int>();
      else if (k == "bbox_policy") {
        const auto s = v.get<std::string>();
        if (s == "fixed") c.bbox_policy = codec::BboxPolicy::Fixed;
        else if (s == "per-frame") c.bbox_policy = codec::BboxPolicy::PerFrame;
        else throw Error(Errc::ConfigError, "bbox_policy must be 'fixed' or 'per-frame'");
      } else if (k == "bbox_center") {
        const auto a = v.get<std::vector<double>>();
        if (a.size() != 3) throw Error(Errc::ConfigError, "bbox_center needs 3 numbers");
        c.fixed_bbox.center = {a[0], a[1], a[2]};
      } else if (k == "bbox_side") c.fixed_bbox.side = v.get<double>();
      else if (k == "color_mode") {
        const auto s = v.get<std::string>();
        if (s == "raw") c.color_mode = codec::ColorMode::Raw;
        else if (s == "quant") c.color_mode = codec::ColorMode::Quant;
        else throw Error(Errc::ConfigError, "color_mode must be 'raw' or 'quant'");
      } else if (k == "luma_bits") c.quant.luma_bits = v.get<int>();
      else if (k == "chroma_bits") c.quant.chroma_bits = v.get<int>();
      else throw Error(Errc::ConfigError, "unknown codec key '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("codec: ") + e.what());
  }
  c.validate();
  return c;
}

json scenario_to_json(const ScenarioConfig& c) {
  json links = json::array();
  for (const auto& [id, l] : c.links) {
    json e = link_to_json(l);
    e["member"] = id;
    links.push_back(e);
  }
  json service = service_to_json(c.service);
  service["mode"] = service_mode_name(c.service_mode);
  return {{"participants", c.participants},
          {"groups", c.groups},
          {"duration_s", c.duration_s},
          {"seed", c.seed},
          {"fps", c.fps},
          {"scene", scene_to_json(c.scene)},
          {"codec", codec_to_json(c.codec)},
          {"link", link_to_json(c.link)},
          {"links", links},
          {"clock_mode", clock_mode_name(c.clock_mode)},
          {"orchestrator", {{"host", c.orchestrator_host}, {"port", c.orchestrator_port}}},
          {"service", service},
          {"clock_offsets_us", c.clock_offsets_us},
          {"clock_offset_bound_us", c.clock_offset_bound_us},
          {"heartbeat_timeout_ms", c.heartbeat_timeout_ms},
          {"window_s", c.window_s},
          {"capture_phase", c.aligned_capture ? "aligned" : "random"}};
}

ScenarioConfig scenario_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigError, "scenario must be a JSON object");
  ScenarioConfig c;
  try {
    // The default link has to be known before per-member overrides inherit from it.
    if (j.contains("link")) c.link = link_from_json(j.at("link"), c.link);
    for (const auto& [k, v] : j.items()) {
      if (k == "participants") c.participants = v.get<int>();
      else if (k == "groups") c.groups = v.get<std::vector<int>>();
      else if (k == "duration_s") c.duration_s = v.get<double>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "fps") c.fps = v.get<double>();
      else if (k == "scene") c.scene = scene_from_json(v);
      else if (k == "codec") c.codec = codec_from_json(v);
      else if (k == "link") continue;
      else if (k == "links") {
        for (const auto& e : v) {
          const auto id = e.at("member").get<std::uint32_t>();
          if (!c.links.emplace(id, link_from_json(e, c.link)).second)
            throw Error(Errc::ConfigError, "duplicate link override for member " + std::to_string(id));
        }
      } else if (k == "clock_mode") {
        const auto s = v.get<std::string>();
        if (s == "virtual") c.clock_mode = ClockMode::Virtual;
        else if (s == "realtime") c.clock_mode = ClockMode::Realtime;
        else throw Error(Errc::ConfigError, "clock_mode must be 'virtual' or 'realtime'");
      } else if (k == "orchestrator") {
        for (const auto& [ok, ov] : v.items()) {
          if (ok == "host") c.orchestrator_host = ov.get<std::string>();
          else if (ok == "port") c.orchestrator_port = ov.get<std::uint16_t>();
          else throw Error(Errc::ConfigError, "unknown orchestrator key '" + ok + "'");
        }
      } else if (k == "service") {
        json times = v;
        if (times.contains("mode")) {
          c.service_mode = service_mode_from(times.at("mode").get<std::string>());
          times.erase("mode");
        }
        ServiceTimes s = c.service;
        for (const auto& [sk, sv] : times.items()) {
          if (sk == "capture_us") s.capture_us = sv.get<std::uint64_t>();
          else if (sk == "encode_us") s.encode_us = sv.get<std::uint64_t>();
          else if (sk == "decode_us") s.decode_us = sv.get<std::uint64_t>();
          else if (sk == "decode_load_us") s.decode_load_us = sv.get<std::uint64_t>();
          else if (sk == "decoder_threads") s.decoder_threads = sv.get<int>();
          else if (sk == "shared_worker") s.shared_worker = sv.get<bool>();
          else throw Error(Errc::ConfigError, "unknown service key '" + sk + "'");
        }
        c.service = s;
      } else if (k == "clock_offsets_us") c.clock_offsets_us = v.get<std::vector<std::int64_t>>();
      else if (k == "clock_offset_bound_us") c.clock_offset_bound_us = v.get<std::int64_t>();
      else if (k == "heartbeat_timeout_ms") c.heartbeat_timeout_ms = v.get<std::uint64_t>();
      else if (k == "window_s") c.window_s = v.get<double>();
      else if (k == "capture_phase") {
        const auto ph = v.get<std::string>();
        if (ph != "random" && ph != "aligned") throw Error(Errc::ConfigError, "capture_phase must be 'random' or 'aligned'");
        c.aligned_capture = ph == "aligned";
      }
      else throw Error(Errc::ConfigError, "unknown scenario key '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  try {
    return scenario_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(Errc::ConfigError, path + ": " + e.what());
  }
}

// ---- service model ----

ServiceTimes reference_calibration_service() {
  // Two users: 60 + 50 + 40.5 + 2 x 15 (links) = 180.5 ms.
  // Four users: each frame also waits 2 x 35.35 ms of decoder contention.
  ServiceTimes s;
  s.capture_us = 60'000;
  s.encode_us = 50'000;
  s.decode_us = 40'500;
  s.decode_load_us = 35'350;
  s.decoder_threads = 8;
  return s;
}

LinkModel reference_calibration_link() {
  // Two independent uniform +-13.8 ms legs give about 11.3 ms end-to-end stdv.
  LinkModel l;
  l.base_delay_us = 15'000;
  l.jitter_us = 13'800;
  l.bandwidth_bps = 200'000'000;
  return l;
}

namespace {

std::uint64_t median_us(std::vector<std::uint64_t> v) {
  std::sort(v.begin(), v.end());
  const std::uint64_t m = v[v.size() / 2];
  return (m + 50) / 100 * 100;
}

}  // namespace

ServiceTimes measure_service_times(const capture::SceneConfig& scene, const codec::CodecConfig& cfg) {
  static std::mutex mu;
  static std::map<std::string, ServiceTimes> memo;
  const std::string key = scene_to_json(scene).dump() + codec_to_json(cfg).dump() + std::to_string(scene.seed);
  std::lock_guard lock(mu);
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  using clock = std::chrono::steady_clock;
  const auto us = [](clock::duration d) {
    return std::uint64_t(std::chrono::duration_cast<std::chrono::microseconds>(d).count());
  };
  const capture::CameraModel cam = capture::default_camera(scene);
  const capture::CaptureOptions opt;
  constexpr int kRuns = 5;
  std::vector<std::uint64_t> cap, enc, dec;
  for (int i = 0; i < kRuns; ++i) {
    const std::int64_t t = std::int64_t(i) * 66'667;
    // The synthetic camera itself is not timed; only the processing chain.
    const capture::RgbdFrame rgbd = capture::synth_capture(scene, t, cam);
    auto t0 = clock::now();
    const auto depth = capture::remove_background(rgbd.depth, opt.z_min_mm, opt.z_max_mm);
    const auto local = capture::back_project(depth, rgbd.color, cam);
    const auto world = capture::transform_to_world(local, cam.extrinsic);
    const auto cloud = capture::fuse(std::span(&world, 1), opt.capture_radius_m);
    auto t1 = clock::now();
    const codec::EncodedFrame e = codec::encode_frame(cloud, cfg);
    const Bytes wire = codec::serialize(e);
    auto t2 = clock::now();
    const codec::PointCloudFrame back = codec::decode_frame(codec::parse_encoded_frame(wire));
    auto t3 = clock::now();
    if (back.points.size() != e.point_count) throw Error(Errc::ScenarioError, "benchmark decode mismatch");
    cap.push_back(us(t1 - t0));
    enc.push_back(us(t2 - t1));
    dec.push_back(us(t3 - t2));
  }
  ServiceTimes s;
  s.capture_us = median_us(cap);
  s.encode_us = median_us(enc);
  s.decode_us = median_us(dec);
  // The client is one sequential actor: contention between streams and with
  // its own publishing shows up as queueing, not as a fitted load term.
  s.decode_load_us = 0;
  s.decoder_threads = 1;
  s.shared_worker = true;
  memo.emplace(key, s);
  return s;
}

ResolvedScenario resolve(const ScenarioConfig& in) {
  in.validate();
  ResolvedScenario r{in, {}, {}};
  if (in.clock_mode == ClockMode::Realtime) {
    r.label = "real time: wall-clock processing, loopback sockets, no link emulation";
    return r;
  }
  switch (in.service_mode) {
    case ServiceMode::Measured:
      r.service = measure_service_times(in.scene, in.codec);
      r.label = "measured on this host (median of 5 frames)";
      break;
    case ServiceMode::Fixed:
      r.service = in.service;
      r.label = "fixed (from config)";
      break;
    case ServiceMode::ReferenceCalibration:
      r.service = reference_calibration_service();
      r.cfg.link = reference_calibration_link();
      r.cfg.links.clear();
      r.label = "reference-calibration: calibrated, not predictive";
      break;
  }
  r.cfg.service = r.service;
  return r;
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  return cfg.clock_mode == ClockMode::Virtual ? run_virtual(cfg) : run_realtime(cfg);
}

}  // namespace holo::harness
