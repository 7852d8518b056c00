// SPDX-License-Identifier: Apache-2.0
//
// holo: run conferencing scenarios, print reports, benchmark the pipeline,
// or serve as a standalone orchestrator.
#include <atomic>
#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "holo/common/error.hpp"
#include "holo/harness/scenario.hpp"
#include "holo/orchestrator/server.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

int cmd_run(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed, bool realtime) {
  holo::harness::ScenarioConfig cfg = holo::harness::load_scenario(config);
  if (seed) cfg.seed = *seed;
  if (realtime) cfg.clock_mode = holo::harness::ClockMode::Realtime;
  const auto result = holo::harness::run_scenario(cfg);
  holo::harness::write_report(result.report, out);
  holo::harness::print_summary(result.report, std::cout);
  std::cout << "wrote " << out << "/summary.json, throughput.csv, delays.csv\n";
  return 0;
}

int cmd_report(const std::string& in) {
  holo::harness::print_summary(holo::harness::read_report(in), std::cout);
  return 0;
}

int cmd_calibrate(const std::string& config) {
  holo::harness::ScenarioConfig cfg;
  if (!config.empty()) cfg = holo::harness::load_scenario(config);
  const auto s = holo::harness::measure_service_times(cfg.scene, cfg.codec);
  std::cout << "measured on this host (median of 5 frames, rounded to 0.1 ms)\n"
            << "  capture  " << s.capture_us / 1000.0 << " ms\n"
            << "  encode   " << s.encode_us / 1000.0 << " ms\n"
            << "  decode   " << s.decode_us / 1000.0 << " ms\n";
  const auto r = holo::harness::reference_calibration_service();
  const auto l = holo::harness::reference_calibration_link();
  std::cout << "reference-calibration preset (calibrated, not predictive)\n"
            << "  capture " << r.capture_us / 1000.0 << " ms, encode " << r.encode_us / 1000.0 << " ms, decode "
            << r.decode_us / 1000.0 << " ms + " << r.decode_load_us / 1000.0 << " ms per extra source, "
            << r.decoder_threads << " decoder threads\n"
            << "  link " << l.base_delay_us / 1000.0 << " ms +- " << l.jitter_us / 1000.0 << " ms, "
            << l.bandwidth_bps / 1e6 << " Mbps\n";
  return 0;
}

int cmd_serve(const std::string& config, std::optional<std::uint16_t> port, const std::string& bind) {
  holo::orch::OrchestratorConfig cfg;
  if (!config.empty()) cfg = holo::orch::load_config(config);
  if (port) cfg.listen_port = *port;
  holo::orch::Orchestrator orch(cfg);
  orch.set_log_sink([](const nlohmann::json& j) { std::cout << j.dump() << std::endl; });
  holo::orch::TcpServer server(orch, bind, cfg.listen_port);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << bind << ":" << server.port() << "\n";
  server.run(g_stop);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point-cloud conferencing pipeline: scenarios, reports, relay"};
  app.require_subcommand(1);

  std::string config, out, in, bind = "0.0.0.0";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint16_t> port;
  bool realtime = false;

  auto* run = app.add_subcommand("run", "run a scenario and write summary.json, throughput.csv, delays.csv");
  run->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_flag("--realtime", realtime, "wall clock and real sockets instead of the virtual clock");

  auto* report = app.add_subcommand("report", "print the summary table of a finished run");
  report->add_option("--in", in, "directory holding summary.json")->required();

  auto* calibrate = app.add_subcommand("calibrate", "benchmark capture, encode and decode on this host");
  calibrate->add_option("--config", config, "scenario JSON (scene and codec are used)")->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "run a standalone orchestrator");
  serve->add_option("--config", config, "orchestrator JSON")->check(CLI::ExistingFile);
  serve->add_option("--port", port, "listen port (overrides the config)");
  serve->add_option("--bind", bind, "bind address");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, out, seed, realtime);
    if (*report) return cmd_report(in);
    if (*calibrate) return cmd_calibrate(config);
    if (*serve) return cmd_serve(config, port, bind);
  } catch (const std::exception& e) {
    std::cerr << "holo: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
