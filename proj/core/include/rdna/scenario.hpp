// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scenario files and experiment runs.
//
// A scenario is plain text, one declaration per line, `key=value` options:
//
//   core S11 modulus=11
//   edge E1
//   host VMS1
//   link VMS1:0 E1:1 capacity=10e9 delay=50e-6 buffer=1000
//   controller poll=1 theta_e=0.1 theta_m=0.01 k=3 alpha=0.5 t_rule=0.0005 t_drain=0.01 auto_balance=off
//   flow f1 cbr src=VMS1 dst=VMD2 rate_pps=81274 size=1518 start=0 stop=60
//   flow f2 probe src=VMS2 dst=VMD1 period=1 size=98 start=0 stop=60 jitter=0.001
//   event register flow=f1 path=S11,S19,S17
//   event migrate flow=f1 at=30 path=S11,S13,S17
//   run duration=60 seed=1 window=1
//
// `#` starts a comment. Every run writes throughput.csv, rtt.csv, loss.csv
// and migrations.csv; numbers use fixed notation with 9 fractional digits.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rdna/controller.hpp"
#include "rdna/dataplane.hpp"
#include "rdna/topology.hpp"
#include "rdna/traffic_metrics.hpp"

namespace rdna {

struct Registration {
  std::string flow;
  std::vector<std::string> cores;
  bool operator==(const Registration&) const = default;
};

struct ScriptedMigration {
  std::string flow;
  double at_s = 0;
  std::optional<std::vector<std::string>> cores;  // empty: let the controller choose
  bool operator==(const ScriptedMigration&) const = default;
};

struct RunParams {
  double duration_s = 60;
  std::uint64_t seed = 1;
  double window_s = 1;
  bool operator==(const RunParams&) const = default;
};

struct Scenario {
  Topology topology;
  ControllerParams controller;
  std::vector<FlowSpec> flows;
  std::vector<Registration> registrations;
  std::vector<ScriptedMigration> migrations;
  RunParams run;

  bool operator==(const Scenario&) const = default;
};

struct Diagnostic {
  std::size_t line;  // 1-based; 0 when not tied to a line
  std::string message;
};

struct ParseResult {
  std::optional<Scenario> scenario;
  std::vector<Diagnostic> errors;

  bool ok() const noexcept { return scenario.has_value(); }
};

ParseResult parse_scenario(std::string_view text);
std::string serialize_scenario(const Scenario& scenario);

struct MigrationRecord {
  MigrationAction action;
  std::uint64_t dropped_during_window = 0;    // any cause, decided_at..drain_until
  std::uint64_t unmatched_during_window = 0;  // rule-miss drops in that window
};

struct ExperimentResult {
  Topology topology;
  std::vector<std::string> flow_names;
  ThroughputWindows throughput{SimTime::from_seconds(1), 0, 0};
  std::vector<RttSample> rtt;
  LossCounters loss;
  std::vector<MigrationRecord> migrations;
  std::vector<PollRecord> polls;
  std::vector<RuleLogEntry> rule_log;
  Counters counters;
  std::vector<FlowCounters> flow_counters;
  std::uint64_t in_flight = 0;

  // generated = delivered + every drop category + in flight, exactly.
  bool conserved() const noexcept;
  std::optional<FlowId> flow_id(std::string_view name) const;
};

ExperimentResult run_scenario(const Scenario& scenario, SimulationConfig config = {});

std::string throughput_csv(const ExperimentResult& result);
std::string rtt_csv(const ExperimentResult& result);
std::string loss_csv(const ExperimentResult& result);
std::string migrations_csv(const ExperimentResult& result);
void write_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir);

ExperimentResult run_experiment(const Scenario& scenario, const std::filesystem::path& out_dir);

inline constexpr std::uint32_t kFigPacketSize = 1518;
inline constexpr double kFigElephantPps = 81274;

// Single elephant VMS1 -> VMD2 at `rate_mbps`, moved from S11>S19>S17 to
// S11>S13>S17 at 50 s of a 60 s run.
Scenario builtin_fig_b_migration(double rate_mbps = 400, double blackhole_s = 0);
// 81274 pps x 1518 B elephant VMS1 -> VMD2 plus a 1 s probe VMS2 -> VMD1, both
// on S11>S19>S17; the elephant moves to S11>S13>S17 at 30 s.
Scenario builtin_fig_cd_isolation();
std::optional<Scenario> builtin_scenario(std::string_view name, double rate_mbps = 400);

}  // namespace rdna
