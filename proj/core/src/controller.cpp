// SPDX-License-Identifier: Apache-2.0
#include "rdna/controller.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "rdna/error.hpp"

namespace rdna {

std::string_view to_string(FlowClass cls) noexcept {
  switch (cls) {
    case FlowClass::Unclassified: return "unclassified";
    case FlowClass::Mice: return "mice";
    case FlowClass::Elephant: return "elephant";
  }
  return "?";
}

double StatsSnapshot::utilization(DirectedLink link) const {
  auto it = std::lower_bound(links.begin(), links.end(), link,
                             [](const LinkStats& s, DirectedLink l) { return s.link < l; });
  return it != links.end() && it->link == link ? it->utilization : 0.0;
}

void update_rate(FlowRecord& record, std::uint64_t window_bytes, std::uint64_t window_packets, double window_s,
                 double alpha) {
  const double rate = window_s > 0 ? static_cast<double>(window_bytes) * 8.0 / window_s : 0.0;
  record.ewma_rate_bps = alpha * rate + (1.0 - alpha) * record.ewma_rate_bps;
  record.packets_seen += window_packets;
}

FlowClass classify_flow(FlowRecord& r, double min_path_capacity_bps, const ControllerParams& params) {
  const double elephant_at = params.theta_e * min_path_capacity_bps;
  const double mice_at = params.theta_m * min_path_capacity_bps;
  auto settle = [&] {
    return r.packets_seen > 0 && r.ewma_rate_bps <= mice_at ? FlowClass::Mice : FlowClass::Unclassified;
  };

  if (r.cls == FlowClass::Elephant) {
    r.consecutive_under = r.ewma_rate_bps < elephant_at / 2 ? r.consecutive_under + 1 : 0;
    if (r.consecutive_under >= params.k) {
      r.consecutive_under = 0;
      r.consecutive_over = 0;
      r.cls = settle();
    }
    return r.cls;
  }
  r.consecutive_over = r.ewma_rate_bps >= elephant_at ? r.consecutive_over + 1 : 0;
  if (r.consecutive_over >= params.k) {
    r.consecutive_under = 0;
    r.cls = FlowClass::Elephant;
  } else {
    r.cls = settle();
  }
  return r.cls;
}

std::vector<DirectedLink> flow_core_links(const Topology& topology, const FlowRecord& record) {
  std::vector<DirectedLink> out;
  auto collect = [&](const Path& p) {
    for (const auto& dl : path_links(topology, p)) {
      if (is_core_link(topology, dl)) out.push_back(dl);
    }
  };
  collect(record.path);
  if (record.bidirectional) collect(record.reverse);
  return out;
}

std::vector<Conflict> detect_conflicts(std::span<const FlowRecord> flows, const Topology& topology) {
  struct Usage {
    std::set<FlowId> elephants;
    std::set<FlowId> mice;
  };
  std::map<DirectedLink, Usage> usage;
  for (const auto& f : flows) {
    if (f.cls == FlowClass::Unclassified) continue;
    for (const auto& dl : flow_core_links(topology, f)) {
      auto& u = usage[dl];
      (f.cls == FlowClass::Elephant ? u.elephants : u.mice).insert(f.id);
    }
  }

  std::map<std::pair<std::set<FlowId>, std::set<FlowId>>, std::vector<DirectedLink>> groups;
  for (const auto& [dl, u] : usage) {
    if (!u.elephants.empty() && !u.mice.empty()) groups[{u.elephants, u.mice}].push_back(dl);
  }

  std::vector<Conflict> out;
  for (auto& [sets, links] : groups) {
    const FlowId lead = *sets.first.begin();
    const auto it = std::find_if(flows.begin(), flows.end(), [&](const FlowRecord& f) { return f.id == lead; });
    // Order the shared links the way the lead elephant traverses them.
    std::vector<DirectedLink> ordered;
    for (const auto& dl : flow_core_links(topology, *it)) {
      if (std::find(links.begin(), links.end(), dl) != links.end() &&
          std::find(ordered.begin(), ordered.end(), dl) == ordered.end()) {
        ordered.push_back(dl);
      }
    }
    Conflict c;
    c.link = ordered.front();
    c.segment = std::move(ordered);
    c.elephants.assign(sets.first.begin(), sets.first.end());
    c.mice.assign(sets.second.begin(), sets.second.end());
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const Conflict& a, const Conflict& b) { return a.link < b.link; });
  return out;
}

MigrationAction plan_migration(const FlowRecord& record, const Path& new_path, const Topology& topology, SimTime now,
                               const ControllerParams& params) {
  if (new_path.core_hops == record.path.core_hops) {
    throw Error(Errc::NoOpMigration, "flow " + std::to_string(record.id) + " is already on that path");
  }
  MigrationAction a;
  a.flow = record.id;
  a.old_path = record.path;
  a.new_path = new_path;
  a.old_route = record.route;
  a.new_route = route_id_for_path(new_path, topology);
  a.decided_at = now;
  const SimTime t_rule = SimTime::from_seconds(params.t_rule_s);
  a.dest_rule_at = now + t_rule;
  a.src_rule_at = a.dest_rule_at + t_rule;
  a.blackhole = SimTime::from_seconds(params.blackhole_s);
  a.drain_until = a.src_rule_at + a.blackhole + SimTime::from_seconds(params.t_drain_s);
  return a;
}

std::optional<Path> choose_path(const FlowRecord& record, std::span<const FlowRecord> flows,
                                const StatsSnapshot& stats, const Topology& topology) {
  std::set<DirectedLink> mice_links;
  for (const auto& f : flows) {
    if (f.cls != FlowClass::Mice) continue;
    for (const auto& dl : flow_core_links(topology, f)) mice_links.insert(dl);
  }
  std::optional<Path> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (const auto& candidate :
       enumerate_equal_length_paths(topology, record.path.src_edge, record.path.dst_edge, record.path)) {
    double score = 0;
    bool clean = true;
    for (const auto& dl : path_links(topology, candidate)) {
      if (!is_core_link(topology, dl)) continue;
      if (mice_links.contains(dl)) {
        clean = false;
        break;
      }
      score = std::max(score, stats.utilization(dl));
    }
    if (clean && score < best_score) {
      best_score = score;
      best = candidate;
    }
  }
  return best;
}

std::vector<MigrationAction> decide_migrations(std::span<const Conflict> conflicts, std::span<const FlowRecord> flows,
                                               const StatsSnapshot& stats, const Topology& topology, SimTime now,
                                               const ControllerParams& params) {
  std::vector<MigrationAction> out;
  std::set<FlowId> planned;
  for (const auto& c : conflicts) {
    for (const FlowId id : c.elephants) {
      if (planned.contains(id)) continue;
      const auto it = std::find_if(flows.begin(), flows.end(), [&](const FlowRecord& f) { return f.id == id; });
      if (it == flows.end() || it->cls != FlowClass::Elephant) continue;
      if (auto target = choose_path(*it, flows, stats, topology)) {
        out.push_back(plan_migration(*it, *target, topology, now, params));
        planned.insert(id);
      }
    }
  }
  return out;
}

void install_path_rules(Simulation& sim, FlowId flow, Direction dir, const Path& path, RouteId route, SimTime at,
                        RuleCause cause) {
  const auto& topology = sim.topology();
  std::optional<PortIndex> uplink;
  if (!path.core_hops.empty()) uplink = uplink_port(topology, path);
  sim.install_rule_at(at, {path.src_edge, flow, dir, SetRouteField{route, uplink}, RouteId{}}, cause);
  sim.install_rule_at(at,
                      {path.dst_edge, flow, dir,
                       RestoreSource{Simulation::host_address(path.src_host),
                                     host_port(topology, path.dst_edge, path.dst_host)},
                       route},
                      cause);
}

std::vector<RuleChange> execute_migration(const MigrationAction& a, Simulation& sim) {
  const auto& topology = sim.topology();
  if (a.new_path.core_hops == a.old_path.core_hops) {
    throw Error(Errc::NoOpMigration, "migration to the current path");
  }
  if (a.new_route != route_id_for_path(a.new_path, topology)) {
    throw Error(Errc::RouteMismatch, "route id does not encode the new path");
  }
  if (!(a.dest_rule_at <= a.src_rule_at && a.src_rule_at < a.drain_until)) {
    throw Error(Errc::InvalidArgument, "migration timing must satisfy dest <= src < drain");
  }

  const auto& np = a.new_path;
  const EdgeRule restore{np.dst_edge, a.flow, Direction::Forward,
                         RestoreSource{Simulation::host_address(np.src_host),
                                       host_port(topology, np.dst_edge, np.dst_host)},
                         a.new_route};
  std::optional<PortIndex> uplink;
  if (!np.core_hops.empty()) uplink = uplink_port(topology, np);
  const EdgeRule rewrite{np.src_edge, a.flow, Direction::Forward, SetRouteField{a.new_route, uplink}, RouteId{}};
  EdgeRule old_restore = restore;
  old_restore.edge = a.old_path.dst_edge;
  old_restore.match_route = a.old_route;

  std::vector<RuleChange> changes;
  sim.install_rule_at(a.dest_rule_at, restore, RuleCause::Migration);
  changes.push_back({a.dest_rule_at, restore.edge, RuleOp::Install});
  if (a.blackhole.ps() > 0) {
    sim.remove_rule_at(a.src_rule_at, rewrite, RuleCause::Migration);
    changes.push_back({a.src_rule_at, rewrite.edge, RuleOp::Remove});
  }
  sim.install_rule_at(a.src_rule_at + a.blackhole, rewrite, RuleCause::Migration);
  changes.push_back({a.src_rule_at + a.blackhole, rewrite.edge, RuleOp::Install});
  if (a.old_route != a.new_route) {
    sim.remove_rule_at(a.drain_until, old_restore, RuleCause::Migration);
    changes.push_back({a.drain_until, old_restore.edge, RuleOp::Remove});
  }
  return changes;
}

Controller::Controller(Simulation& sim, ControllerParams params) : sim_(sim), params_(params) {
  const auto& topology = sim_.topology();
  for (NodeIndex n = 0; n < topology.nodes().size(); ++n) {
    for (const auto& [port, pp] : topology.ports(n)) all_links_.push_back({n, port});
  }
  std::sort(all_links_.begin(), all_links_.end());
  last_tx_.assign(all_links_.size(), 0);
  last_poll_ = sim_.now();
}

FlowRecord& Controller::register_flow(FlowId id, FlowKey key, const Path& path, bool bidirectional) {
  const auto& topology = sim_.topology();
  FlowRecord r;
  r.id = id;
  r.key = std::move(key);
  r.path = path;
  r.route = route_id_for_path(path, topology);
  r.bidirectional = bidirectional;
  install_path_rules(sim_, id, Direction::Forward, r.path, r.route, sim_.now(), RuleCause::Registration);
  if (bidirectional) {
    r.reverse = reverse_path(topology, path);
    r.reverse_route = route_id_for_path(r.reverse, topology);
    install_path_rules(sim_, id, Direction::Reverse, r.reverse, r.reverse_route, sim_.now(),
                       RuleCause::Registration);
  }
  flows_.push_back(std::move(r));
  return flows_.back();
}

FlowRecord& Controller::record(FlowId id) {
  for (auto& f : flows_) {
    if (f.id == id) return f;
  }
  throw Error(Errc::InvalidArgument, "flow " + std::to_string(id) + " is not registered");
}

const FlowRecord& Controller::flow(FlowId id) const { return const_cast<Controller*>(this)->record(id); }

void Controller::start(SimTime until) {
  const SimTime step = SimTime::from_seconds(params_.poll_s);
  if (step.ps() <= 0) throw Error(Errc::InvalidArgument, "poll interval must be > 0");
  const SimTime origin = last_poll_;
  for (std::uint64_t i = 1;; ++i) {
    const SimTime t = origin + SimTime::from_seconds(params_.poll_s * static_cast<double>(i));
    if (t > until) break;
    sim_.schedule_timer(t, this, 0, EventKind::StatsPoll);
  }
}

void Controller::on_timer(std::uint64_t, SimTime now) { poll(now); }

StatsSnapshot Controller::collect_stats(SimTime now) {
  const auto& topology = sim_.topology();
  const double window = (now - last_poll_).seconds();
  StatsSnapshot snap;
  snap.at = now;
  snap.links.reserve(all_links_.size());
  for (std::size_t i = 0; i < all_links_.size(); ++i) {
    const auto& dl = all_links_[i];
    const auto tx = sim_.tx_bytes(dl);
    const auto bytes = tx - last_tx_[i];
    last_tx_[i] = tx;
    const double cap = topology.link(topology.peer(dl.from, dl.port)->link).capacity_bps;
    const double util = window > 0 ? static_cast<double>(bytes) * 8.0 / (cap * window) : 0.0;
    snap.links.push_back({dl, bytes, std::min(util, 1.0)});
  }
  for (auto& f : flows_) {
    const auto& fc = sim_.flow_counters(f.id);
    update_rate(f, fc.ingress_bytes - f.last_ingress_bytes, fc.ingress_packets - f.last_ingress_packets, window,
                params_.alpha);
    f.last_ingress_bytes = fc.ingress_bytes;
    f.last_ingress_packets = fc.ingress_packets;
  }
  last_poll_ = now;
  last_stats_ = snap;
  return snap;
}

void Controller::poll(SimTime now) {
  collect_stats(now);
  const auto& topology = sim_.topology();
  PollRecord rec;
  rec.at = now;
  for (auto& f : flows_) {
    classify_flow(f, min_path_capacity(topology, f.path), params_);
    rec.classes.emplace_back(f.id, f.cls);
  }
  rec.conflicts = detect_conflicts(flows_, topology);
  if (params_.auto_balance && !rec.conflicts.empty()) {
    for (const auto& action : decide_migrations(rec.conflicts, flows_, last_stats_, topology, now, params_)) {
      apply(action);
    }
  }
  polls_.push_back(std::move(rec));
}

void Controller::apply(const MigrationAction& action) {
  execute_migration(action, sim_);
  auto& r = record(action.flow);
  r.path = action.new_path;
  r.route = action.new_route;
  migrations_.push_back(action);
}

std::optional<MigrationAction> Controller::migrate(FlowId flow, std::optional<Path> target, SimTime now) {
  auto& r = record(flow);
  if (!target) target = choose_path(r, flows_, last_stats_, sim_.topology());
  if (!target) return std::nullopt;
  const auto action = plan_migration(r, *target, sim_.topology(), now, params_);
  apply(action);
  return action;
}

}  // namespace rdna
