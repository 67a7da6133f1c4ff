// SPDX-License-Identifier: Apache-2.0
#include "rdna/dataplane.hpp"

#include <limits>

#include "rdna/error.hpp"

namespace rdna {

std::string_view to_string(DropCause cause) noexcept {
  switch (cause) {
    case DropCause::DropTail: return "droptail";
    case DropCause::Unmatched: return "unmatched";
    case DropCause::Misroute: return "misroute";
  }
  return "?";
}

std::optional<PortIndex> core_egress_port(const Topology& topology, NodeIndex core, const MacAddress& src_field) {
  const auto& n = topology.node(core);
  if (n.kind != NodeKind::CoreSwitch || n.modulus < 2) return std::nullopt;
  const std::uint64_t port = modulo_forward(decode_route_field(src_field), CoreSwitchId(n.modulus));
  if (port > std::numeric_limits<PortIndex>::max()) return std::nullopt;
  if (!topology.peer(core, static_cast<PortIndex>(port))) return std::nullopt;
  return static_cast<PortIndex>(port);
}

Simulation::Simulation(Topology topology, SimulationConfig config)
    : topology_(std::move(topology)), config_(config) {
  const auto node_count = topology_.nodes().size();
  ports_.resize(node_count);
  tables_.resize(node_count);
  unmatched_.assign(node_count, 0);
  for (NodeIndex n = 0; n < node_count; ++n) {
    const auto& table = topology_.ports(n);
    if (table.empty()) continue;
    ports_[n].resize(static_cast<std::size_t>(table.rbegin()->first) + 1);
    for (const auto& [port, pp] : table) {
      const auto& link = topology_.link(pp.link);
      auto& ps = ports_[n][port];
      ps.wired = true;
      ps.link = pp.link;
      ps.peer = pp.peer;
      ps.capacity_bps = link.capacity_bps;
      ps.propagation = SimTime::from_seconds(link.propagation_delay_s);
      ps.queue.capacity = link.buffer_packets;
    }
  }
}

MacAddress Simulation::host_address(NodeIndex host) noexcept {
  return {0x02, 0x00, 0x00, static_cast<std::uint8_t>((host >> 16) & 0xff),
          static_cast<std::uint8_t>((host >> 8) & 0xff), static_cast<std::uint8_t>(host & 0xff)};
}

FlowCounters& Simulation::flow(FlowId id) {
  if (id >= flows_.size()) flows_.resize(static_cast<std::size_t>(id) + 1);
  return flows_[id];
}

const FlowCounters& Simulation::flow_counters(FlowId id) const {
  static const FlowCounters empty{};
  return id < flows_.size() ? flows_[id] : empty;
}

Simulation::PortState* Simulation::port_state(NodeIndex node, PortIndex port) {
  if (node >= ports_.size() || port >= ports_[node].size()) return nullptr;
  auto* ps = &ports_[node][port];
  return ps->wired ? ps : nullptr;
}

const Simulation::PortState* Simulation::port_state(NodeIndex node, PortIndex port) const {
  return const_cast<Simulation*>(this)->port_state(node, port);
}

std::uint64_t Simulation::tx_bytes(DirectedLink link) const {
  const auto* ps = port_state(link.from, link.port);
  return ps ? ps->tx_bytes : 0;
}

std::uint64_t Simulation::droptail_losses(DirectedLink link, FlowId flow) const {
  auto it = droptail_.find({link, flow});
  return it == droptail_.end() ? 0 : it->second;
}

const PortQueue& Simulation::queue(DirectedLink link) const {
  const auto* ps = port_state(link.from, link.port);
  if (!ps) throw Error(Errc::UnknownLink, "no queue on " + describe(topology_, link));
  return ps->queue;
}

std::uint32_t Simulation::store(Packet packet) {
  if (!free_slots_.empty()) {
    const auto slot = free_slots_.back();
    free_slots_.pop_back();
    packets_[slot] = packet;
    return slot;
  }
  packets_.push_back(packet);
  return static_cast<std::uint32_t>(packets_.size() - 1);
}

Packet Simulation::take(std::uint32_t slot) {
  free_slots_.push_back(slot);
  return packets_[slot];
}

void Simulation::push(Event e) {
  if (events_.size() >= config_.max_pending_events) {
    throw Error(Errc::EventOverflow, "pending event count exceeded " + std::to_string(config_.max_pending_events));
  }
  e.order = next_order_++;
  events_.push(e);
}

void Simulation::drop(const Packet& packet, NodeIndex node, DropCause cause) {
  const auto c = static_cast<std::size_t>(cause);
  ++counters_.dropped[c];
  ++flow(packet.flow).dropped[c];
  if (cause == DropCause::Unmatched) ++unmatched_[node];
  if (observer_) observer_->on_dropped(packet, node, cause, now_);
}

void Simulation::deliver(const Packet& packet, NodeIndex host) {
  ++counters_.delivered;
  ++flow(packet.flow).delivered;
  if (observer_) observer_->on_delivered(packet, host, now_);
}

void Simulation::send_from_host(NodeIndex host, Packet packet) {
  ++counters_.generated;
  ++flow(packet.flow).generated;
  const auto& ports = topology_.ports(host);
  if (ports.empty()) {
    drop(packet, host, DropCause::Misroute);
    return;
  }
  enqueue(packet, host, ports.begin()->first);
}

bool Simulation::enqueue(Packet packet, NodeIndex node, PortIndex port) {
  auto* ps = port_state(node, port);
  if (!ps) {
    drop(packet, node, DropCause::Misroute);
    return false;
  }
  auto& q = ps->queue;
  if (q.occupancy >= q.capacity) {
    ++droptail_[{DirectedLink{node, port}, packet.flow}];
    drop(packet, node, DropCause::DropTail);
    return false;
  }
  ++q.occupancy;
  const SimTime depart = max(now_, q.busy_until) + transmission_time(packet.size, ps->capacity_bps);
  q.busy_until = depart;
  push({depart, 0, EventKind::DequeueComplete, node, port, packet.size, nullptr});
  const auto slot = store(packet);
  push({depart + ps->propagation, 0, EventKind::Arrival, ps->peer.node, ps->peer.port, slot, nullptr});
  return true;
}

ForwardDecision Simulation::edge_ingress(Packet packet, NodeIndex edge) {
  auto& fc = flow(packet.flow);
  ++fc.ingress_packets;
  fc.ingress_bytes += packet.size;

  const auto& source = tables_[edge].source;
  const auto it = source.find({packet.flow, packet.dir});
  if (it == source.end()) {
    drop(packet, edge, DropCause::Unmatched);
    return {ForwardDecision::Outcome::Drop, 0, DropCause::Unmatched, packet.src_field};
  }
  packet.src_field = encode_route_field(it->second.route);
  if (!it->second.uplink) return edge_egress(packet, edge);
  const PortIndex port = *it->second.uplink;
  if (!enqueue(packet, edge, port)) return {ForwardDecision::Outcome::Drop, port, DropCause::DropTail, packet.src_field};
  return {ForwardDecision::Outcome::Enqueue, port, DropCause::Unmatched, packet.src_field};
}

ForwardDecision Simulation::core_forward(Packet packet, NodeIndex core) {
  if (++packet.hops > config_.max_hops) {
    drop(packet, core, DropCause::Misroute);
    return {ForwardDecision::Outcome::Drop, 0, DropCause::Misroute, packet.src_field};
  }
  const auto port = core_egress_port(topology_, core, packet.src_field);
  if (!port) {
    drop(packet, core, DropCause::Misroute);
    return {ForwardDecision::Outcome::Drop, 0, DropCause::Misroute, packet.src_field};
  }
  if (!enqueue(packet, core, *port)) return {ForwardDecision::Outcome::Drop, *port, DropCause::DropTail, packet.src_field};
  return {ForwardDecision::Outcome::Enqueue, *port, DropCause::Unmatched, packet.src_field};
}

ForwardDecision Simulation::edge_egress(Packet packet, NodeIndex edge) {
  const auto& restore = tables_[edge].restore;
  const auto it = restore.find({packet.flow, packet.dir, decode_route_field(packet.src_field).value()});
  if (it == restore.end()) {
    drop(packet, edge, DropCause::Unmatched);
    return {ForwardDecision::Outcome::Drop, 0, DropCause::Unmatched, packet.src_field};
  }
  packet.src_field = it->second.original;
  const PortIndex port = it->second.host_port;
  if (!enqueue(packet, edge, port)) return {ForwardDecision::Outcome::Drop, port, DropCause::DropTail, packet.src_field};
  return {ForwardDecision::Outcome::Enqueue, port, DropCause::Unmatched, packet.src_field};
}

void Simulation::on_arrival(NodeIndex node, PortIndex in_port, std::uint32_t slot) {
  const Packet packet = take(slot);
  switch (topology_.node(node).kind) {
    case NodeKind::Host:
      deliver(packet, node);
      break;
    case NodeKind::CoreSwitch:
      core_forward(packet, node);
      break;
    case NodeKind::EdgeSwitch: {
      const auto pp = topology_.peer(node, in_port);
      if (pp && topology_.node(pp->peer.node).kind == NodeKind::Host) {
        edge_ingress(packet, node);
      } else {
        edge_egress(packet, node);
      }
      break;
    }
  }
}

void Simulation::install_rule_at(SimTime at, EdgeRule rule, RuleCause cause) {
  if (rule.edge >= topology_.nodes().size() || topology_.node(rule.edge).kind != NodeKind::EdgeSwitch) {
    throw Error(Errc::InvalidRule, "rules can only be installed on edge switches");
  }
  if (at < now_) throw Error(Errc::InvalidArgument, "rule install scheduled in the past");
  pending_rules_.push_back({rule, RuleOp::Install, cause});
  push({at, 0, EventKind::RuleInstall, rule.edge, 0, pending_rules_.size() - 1, nullptr});
}

void Simulation::remove_rule_at(SimTime at, EdgeRule rule, RuleCause cause) {
  if (rule.edge >= topology_.nodes().size() || topology_.node(rule.edge).kind != NodeKind::EdgeSwitch) {
    throw Error(Errc::InvalidRule, "rules can only be removed from edge switches");
  }
  if (at < now_) throw Error(Errc::InvalidArgument, "rule removal scheduled in the past");
  pending_rules_.push_back({rule, RuleOp::Remove, cause});
  push({at, 0, EventKind::RuleInstall, rule.edge, 0, pending_rules_.size() - 1, nullptr});
}

void Simulation::apply_rule(const PendingRule& r) {
  auto& t = tables_[r.rule.edge];
  if (const auto* set = std::get_if<SetRouteField>(&r.rule.action)) {
    const auto key = std::make_pair(r.rule.flow, r.rule.dir);
    if (r.op == RuleOp::Install) {
      t.source.insert_or_assign(key, *set);
    } else {
      t.source.erase(key);
    }
  } else {
    const auto& restore = std::get<RestoreSource>(r.rule.action);
    const auto key = std::make_tuple(r.rule.flow, r.rule.dir, r.rule.match_route.value());
    if (r.op == RuleOp::Install) {
      t.restore.insert_or_assign(key, restore);
    } else {
      t.restore.erase(key);
    }
  }
  rule_log_.push_back({now_, r.rule.edge, r.op, r.cause, r.rule});
}

std::optional<SetRouteField> Simulation::source_rule(NodeIndex edge, FlowId flow, Direction dir) const {
  const auto& source = tables_.at(edge).source;
  if (auto it = source.find({flow, dir}); it != source.end()) return it->second;
  return std::nullopt;
}

std::optional<RestoreSource> Simulation::restore_rule(NodeIndex edge, FlowId flow, Direction dir,
                                                      RouteId route) const {
  const auto& restore = tables_.at(edge).restore;
  if (auto it = restore.find({flow, dir, route.value()}); it != restore.end()) return it->second;
  return std::nullopt;
}

void Simulation::schedule_timer(SimTime at, TimerClient* client, std::uint64_t tag, EventKind kind) {
  if (at < now_) throw Error(Errc::InvalidArgument, "timer scheduled in the past");
  push({at, 0, kind, 0, 0, tag, client});
}

void Simulation::dispatch(const Event& e) {
  switch (e.kind) {
    case EventKind::Arrival:
      on_arrival(e.node, e.port, static_cast<std::uint32_t>(e.aux));
      break;
    case EventKind::DequeueComplete: {
      auto* ps = port_state(e.node, e.port);
      --ps->queue.occupancy;
      ps->tx_bytes += e.aux;
      break;
    }
    case EventKind::RuleInstall:
      apply_rule(pending_rules_[e.aux]);
      break;
    case EventKind::StatsPoll:
    case EventKind::FlowTimer:
    case EventKind::Control:
      e.client->on_timer(e.aux, now_);
      break;
  }
}

void Simulation::run_until(SimTime t_end) {
  while (!events_.empty() && events_.top().time <= t_end) {
    const Event e = events_.top();
    events_.pop();
    now_ = e.time;
    dispatch(e);
  }
  now_ = max(now_, t_end);
}

}  // namespace rdna
