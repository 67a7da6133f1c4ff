// SPDX-License-Identifier: Apache-2.0
#pragma once

// Packet-level discrete-event model of the fabric.
//
// Edge switches hold the only forwarding state: a source rule per (flow,
// direction) that writes the route id into the source-address field, and a
// restore rule per (flow, direction, route id) that puts the original source
// address back before delivery. Core switches forward on route mod modulus
// and hold nothing. Every egress port is a drop-tail FIFO in front of a
// serializing link with fixed propagation delay.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <tuple>
#include <variant>
#include <vector>

#include "rdna/residue_routing.hpp"
#include "rdna/sim_time.hpp"
#include "rdna/topology.hpp"

namespace rdna {

using FlowId = std::uint32_t;

enum class PacketKind : std::uint8_t { Data, ProbeRequest, ProbeReply };
enum class Direction : std::uint8_t { Forward, Reverse };

struct Packet {
  FlowId flow = 0;
  Direction dir = Direction::Forward;
  PacketKind kind = PacketKind::Data;
  std::uint8_t hops = 0;
  std::uint32_t size = 0;  // bytes
  MacAddress src_field{};
  MacAddress original_src{};
  MacAddress dst_field{};
  std::uint64_t seq = 0;
  SimTime created_at;
  SimTime echo_sent_at;  // ProbeReply: when the matching request left its host
};

enum class DropCause : std::uint8_t { DropTail, Unmatched, Misroute };
inline constexpr std::size_t kDropCauseCount = 3;

std::string_view to_string(DropCause cause) noexcept;

struct SetRouteField {
  RouteId route;
  std::optional<PortIndex> uplink;  // empty: destination host hangs off this same edge
  bool operator==(const SetRouteField&) const = default;
};

struct RestoreSource {
  MacAddress original;
  PortIndex host_port;
  bool operator==(const RestoreSource&) const = default;
};

struct EdgeRule {
  NodeIndex edge;
  FlowId flow;
  Direction dir;
  // Source rules match the flow; restore rules match the flow plus the route
  // value found in the source-address field.
  std::variant<SetRouteField, RestoreSource> action;
  RouteId match_route;  // restore rules only
};

enum class RuleOp : std::uint8_t { Install, Remove };
enum class RuleCause : std::uint8_t { Registration, Migration };

struct RuleLogEntry {
  SimTime time;
  NodeIndex node;
  RuleOp op;
  RuleCause cause;
  EdgeRule rule;
};

struct PortQueue {
  std::uint32_t capacity = 0;
  std::uint32_t occupancy = 0;
  SimTime busy_until;
};

enum class EventKind : std::uint8_t { Arrival, DequeueComplete, RuleInstall, StatsPoll, FlowTimer, Control };

class TimerClient {
 public:
  virtual ~TimerClient() = default;
  virtual void on_timer(std::uint64_t tag, SimTime now) = 0;
};

class DataplaneObserver {
 public:
  virtual ~DataplaneObserver() = default;
  virtual void on_delivered(const Packet& /*packet*/, NodeIndex /*host*/, SimTime /*now*/) {}
  virtual void on_dropped(const Packet& /*packet*/, NodeIndex /*node*/, DropCause /*cause*/, SimTime /*now*/) {}
};

struct FlowCounters {
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::array<std::uint64_t, kDropCauseCount> dropped{};
  std::uint64_t ingress_packets = 0;  // accepted from a host port at an edge
  std::uint64_t ingress_bytes = 0;
};

struct Counters {
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::array<std::uint64_t, kDropCauseCount> dropped{};

  std::uint64_t total_dropped() const noexcept { return dropped[0] + dropped[1] + dropped[2]; }
};

struct ForwardDecision {
  enum class Outcome : std::uint8_t { Enqueue, Drop } outcome;
  PortIndex port = 0;
  DropCause cause = DropCause::Unmatched;
  MacAddress src_field{};  // as the packet left (or would have left) the node
};

// Pure core forwarding: the egress port for `src_field` at `core`, if wired.
std::optional<PortIndex> core_egress_port(const Topology& topology, NodeIndex core, const MacAddress& src_field);

struct SimulationConfig {
  std::uint64_t max_pending_events = 100'000'000;
  std::uint8_t max_hops = 64;  // looping packets are dropped as misroutes
};

class Simulation {
 public:
  explicit Simulation(Topology topology, SimulationConfig config = {});

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const Topology& topology() const noexcept { return topology_; }
  SimTime now() const noexcept { return now_; }
  void set_observer(DataplaneObserver* observer) noexcept { observer_ = observer; }

  // Stable locally-administered address of a host.
  static MacAddress host_address(NodeIndex host) noexcept;

  // Hand a freshly generated packet to a host NIC at the current time.
  void send_from_host(NodeIndex host, Packet packet);

  // Rule changes take effect when their event fires. Installing on a node
  // that is not an edge switch throws InvalidRule.
  void install_rule_at(SimTime at, EdgeRule rule, RuleCause cause);
  void remove_rule_at(SimTime at, EdgeRule rule, RuleCause cause);

  void schedule_timer(SimTime at, TimerClient* client, std::uint64_t tag, EventKind kind = EventKind::FlowTimer);

  // Process every event with time <= t_end in (time, creation order).
  void run_until(SimTime t_end);

  // Per-node processing steps; public so they can be exercised directly.
  ForwardDecision edge_ingress(Packet packet, NodeIndex edge);
  ForwardDecision core_forward(Packet packet, NodeIndex core);
  ForwardDecision edge_egress(Packet packet, NodeIndex edge);
  // Drop-tail admission, then serialization behind whatever is queued.
  bool enqueue(Packet packet, NodeIndex node, PortIndex port);

  const Counters& counters() const noexcept { return counters_; }
  const FlowCounters& flow_counters(FlowId flow) const;
  std::size_t flow_count() const noexcept { return flows_.size(); }
  std::uint64_t unmatched_at(NodeIndex edge) const { return unmatched_.at(edge); }
  // Bytes whose transmission completed on a directed link since start.
  std::uint64_t tx_bytes(DirectedLink link) const;
  std::uint64_t droptail_losses(DirectedLink link, FlowId flow) const;
  const PortQueue& queue(DirectedLink link) const;
  const std::vector<RuleLogEntry>& rule_log() const noexcept { return rule_log_; }
  std::size_t pending_events() const noexcept { return events_.size(); }
  // Packets currently queued or on a wire; counted from the packet pool.
  std::size_t in_flight() const noexcept { return packets_.size() - free_slots_.size(); }

  std::optional<SetRouteField> source_rule(NodeIndex edge, FlowId flow, Direction dir) const;
  std::optional<RestoreSource> restore_rule(NodeIndex edge, FlowId flow, Direction dir, RouteId route) const;

 private:
  struct PortState {
    bool wired = false;
    std::size_t link = 0;
    LinkEnd peer{};
    double capacity_bps = 0;
    SimTime propagation;
    PortQueue queue;
    std::uint64_t tx_bytes = 0;
  };

  struct EdgeTables {
    std::map<std::pair<FlowId, Direction>, SetRouteField> source;
    std::map<std::tuple<FlowId, Direction, std::uint64_t>, RestoreSource> restore;
  };

  struct Event {
    SimTime time;
    std::uint64_t order;
    EventKind kind;
    NodeIndex node;
    PortIndex port;
    std::uint64_t aux;  // packet slot, byte count, rule slot or timer tag
    TimerClient* client;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.order > b.order;
    }
  };

  struct PendingRule {
    EdgeRule rule;
    RuleOp op;
    RuleCause cause;
  };

  void push(Event e);
  void dispatch(const Event& e);
  void on_arrival(NodeIndex node, PortIndex in_port, std::uint32_t slot);
  void apply_rule(const PendingRule& r);
  void drop(const Packet& packet, NodeIndex node, DropCause cause);
  void deliver(const Packet& packet, NodeIndex host);
  FlowCounters& flow(FlowId id);
  PortState* port_state(NodeIndex node, PortIndex port);
  const PortState* port_state(NodeIndex node, PortIndex port) const;
  std::uint32_t store(Packet packet);
  Packet take(std::uint32_t slot);

  Topology topology_;
  SimulationConfig config_;
  DataplaneObserver* observer_ = nullptr;
  SimTime now_;
  std::uint64_t next_order_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> events_;

  std::vector<std::vector<PortState>> ports_;
  std::vector<EdgeTables> tables_;
  std::vector<std::uint64_t> unmatched_;
  std::map<std::pair<DirectedLink, FlowId>, std::uint64_t> droptail_;

  std::vector<Packet> packets_;
  std::vector<std::uint32_t> free_slots_;
  std::vector<PendingRule> pending_rules_;

  Counters counters_;
  std::vector<FlowCounters> flows_;
  std::vector<RuleLogEntry> rule_log_;
};

}  // namespace rdna
