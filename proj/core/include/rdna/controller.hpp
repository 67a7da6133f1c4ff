// SPDX-License-Identifier: Apache-2.0
#pragma once

// Centralized control loop. Each poll runs the four stages in order:
// collect link and flow statistics, classify flows, find links where an
// elephant shares the way with mice, and (when auto-balancing) move the
// elephants to an equal-length path that carries no mice. Moving a flow only
// ever touches its two edge switches.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdna/dataplane.hpp"
#include "rdna/topology.hpp"

namespace rdna {

enum class FlowClass : std::uint8_t { Unclassified, Mice, Elephant };
std::string_view to_string(FlowClass cls) noexcept;

struct FlowKey {
  std::string src_host;
  std::string dst_host;
  std::string protocol;
  std::string label;
};

struct FlowRecord {
  FlowId id = 0;
  FlowKey key;
  FlowClass cls = FlowClass::Unclassified;
  double ewma_rate_bps = 0;
  std::uint32_t consecutive_over = 0;
  std::uint32_t consecutive_under = 0;
  std::uint64_t packets_seen = 0;
  Path path;
  RouteId route;
  // Flows with traffic in both directions (probes) also pin a reverse path.
  bool bidirectional = false;
  Path reverse;
  RouteId reverse_route;

  std::uint64_t last_ingress_bytes = 0;
  std::uint64_t last_ingress_packets = 0;
};

struct ControllerParams {
  double poll_s = 1.0;
  double theta_e = 0.1;
  double theta_m = 0.01;
  std::uint32_t k = 3;
  double alpha = 0.5;
  double t_rule_s = 0.5e-3;
  double t_drain_s = 10e-3;
  // Gap between removing the old source rule and installing the new one.
  // Zero gives make-before-break; non-zero emulates a non-atomic install.
  double blackhole_s = 0;
  bool auto_balance = false;

  bool operator==(const ControllerParams&) const = default;
};

struct LinkStats {
  DirectedLink link;
  std::uint64_t bytes_this_poll = 0;
  double utilization = 0;  // of capacity over the poll window, clamped to 1
};

struct StatsSnapshot {
  SimTime at;
  std::vector<LinkStats> links;  // ordered by link

  double utilization(DirectedLink link) const;
};

struct MigrationAction {
  FlowId flow = 0;
  Path old_path;
  Path new_path;
  RouteId old_route;
  RouteId new_route;
  SimTime decided_at;
  SimTime dest_rule_at;
  SimTime src_rule_at;
  SimTime drain_until;
  SimTime blackhole;
};

// A run of links shared by the same elephants and mice. `link` is the first
// of them along the lowest-numbered elephant's path.
struct Conflict {
  DirectedLink link;
  std::vector<DirectedLink> segment;
  std::vector<FlowId> elephants;
  std::vector<FlowId> mice;
};

struct RuleChange {
  SimTime at;
  NodeIndex node;
  RuleOp op;
};

struct PollRecord {
  SimTime at;
  std::vector<std::pair<FlowId, FlowClass>> classes;
  std::vector<Conflict> conflicts;
};

// EWMA update from one poll window of ingress counters.
void update_rate(FlowRecord& record, std::uint64_t window_bytes, std::uint64_t window_packets, double window_s,
                 double alpha);

// Threshold classifier with K-poll confirmation and hysteresis on the way
// out of Elephant. Updates the record's counters and class.
FlowClass classify_flow(FlowRecord& record, double min_path_capacity_bps, const ControllerParams& params);

// Core-to-core links the flow puts traffic on (both directions when the flow
// is bidirectional).
std::vector<DirectedLink> flow_core_links(const Topology& topology, const FlowRecord& record);

std::vector<Conflict> detect_conflicts(std::span<const FlowRecord> flows, const Topology& topology);

// Timing fields filled from params. Throws NoOpMigration for an unchanged path.
MigrationAction plan_migration(const FlowRecord& record, const Path& new_path, const Topology& topology, SimTime now,
                               const ControllerParams& params);

// Best equal-length path for one flow: carries no mice, then lowest maximum
// link utilization, then enumeration order.
std::optional<Path> choose_path(const FlowRecord& record, std::span<const FlowRecord> flows,
                                const StatsSnapshot& stats, const Topology& topology);

std::vector<MigrationAction> decide_migrations(std::span<const Conflict> conflicts, std::span<const FlowRecord> flows,
                                               const StatsSnapshot& stats, const Topology& topology, SimTime now,
                                               const ControllerParams& params);

// Destination restore rule, then source rewrite, then removal of the old
// restore rule after the drain window. Throws RouteMismatch / NoOpMigration.
std::vector<RuleChange> execute_migration(const MigrationAction& action, Simulation& sim);

// Initial rules for a flow on `path` in direction `dir`, effective at `at`.
void install_path_rules(Simulation& sim, FlowId flow, Direction dir, const Path& path, RouteId route, SimTime at,
                        RuleCause cause);

class Controller : public TimerClient {
 public:
  Controller(Simulation& sim, ControllerParams params);

  FlowRecord& register_flow(FlowId id, FlowKey key, const Path& path, bool bidirectional);

  // Schedules polls at poll_s, 2*poll_s, ... up to `until`.
  void start(SimTime until);
  void on_timer(std::uint64_t tag, SimTime now) override;

  StatsSnapshot collect_stats(SimTime now);
  void poll(SimTime now);
  // Scripted migration. Without a target the decision stage picks one; no
  // action is taken when it finds nothing.
  std::optional<MigrationAction> migrate(FlowId flow, std::optional<Path> target, SimTime now);

  const ControllerParams& params() const noexcept { return params_; }
  const std::vector<FlowRecord>& flows() const noexcept { return flows_; }
  const FlowRecord& flow(FlowId id) const;
  const std::vector<MigrationAction>& migrations() const noexcept { return migrations_; }
  const std::vector<PollRecord>& polls() const noexcept { return polls_; }
  const StatsSnapshot& last_stats() const noexcept { return last_stats_; }

 private:
  FlowRecord& record(FlowId id);
  void apply(const MigrationAction& action);

  Simulation& sim_;
  ControllerParams params_;
  std::vector<FlowRecord> flows_;
  std::vector<DirectedLink> all_links_;
  std::vector<std::uint64_t> last_tx_;
  SimTime last_poll_;
  StatsSnapshot last_stats_;
  std::vector<MigrationAction> migrations_;
  std::vector<PollRecord> polls_;
};

}  // namespace rdna
