// SPDX-License-Identifier: Apache-2.0
#include "rdna/topology.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include "rdna/error.hpp"

namespace rdna {

std::string_view to_string(NodeKind kind) noexcept {
  switch (kind) {
    case NodeKind::Host: return "host";
    case NodeKind::EdgeSwitch: return "edge";
    case NodeKind::CoreSwitch: return "core";
  }
  return "?";
}

NodeIndex Topology::add_node(Node n) {
  nodes_.push_back(std::move(n));
  ports_.emplace_back();
  return static_cast<NodeIndex>(nodes_.size() - 1);
}

NodeIndex Topology::add_host(std::string name) { return add_node({NodeKind::Host, std::move(name), 0}); }
NodeIndex Topology::add_edge(std::string name) { return add_node({NodeKind::EdgeSwitch, std::move(name), 0}); }
NodeIndex Topology::add_core(std::string name, std::uint64_t modulus) {
  return add_node({NodeKind::CoreSwitch, std::move(name), modulus});
}

std::size_t Topology::add_link(LinkEnd a, LinkEnd b, double capacity_bps, double propagation_delay_s,
                               std::uint32_t buffer_packets) {
  if (a.node >= nodes_.size() || b.node >= nodes_.size()) {
    throw Error(Errc::UnknownNode, "link endpoint refers to an undeclared node");
  }
  const std::size_t index = links_.size();
  links_.push_back({a, b, capacity_bps, propagation_delay_s, buffer_packets});
  // First declaration wins; reuse is reported by validate_topology().
  ports_[a.node].try_emplace(a.port, PortPeer{index, b});
  ports_[b.node].try_emplace(b.port, PortPeer{index, a});
  return index;
}

std::optional<NodeIndex> Topology::find(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return static_cast<NodeIndex>(i);
  }
  return std::nullopt;
}

std::optional<PortPeer> Topology::peer(NodeIndex node, PortIndex port) const {
  if (node >= ports_.size()) return std::nullopt;
  const auto& table = ports_[node];
  if (auto it = table.find(port); it != table.end()) return it->second;
  return std::nullopt;
}

std::optional<PortIndex> Topology::port_towards(NodeIndex from, NodeIndex to) const {
  if (from >= ports_.size()) return std::nullopt;
  for (const auto& [port, pp] : ports_[from]) {
    if (pp.peer.node == to) return port;
  }
  return std::nullopt;
}

ValidationReport validate_topology(const Topology& topology) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, std::optional<std::size_t> link, std::string msg) {
    report.violations.push_back({kind, link, std::move(msg)});
  };
  const auto& nodes = topology.nodes();

  std::set<std::string> seen;
  for (const auto& n : nodes) {
    if (!seen.insert(n.name).second) add(ViolationKind::DuplicateName, std::nullopt, "duplicate node name " + n.name);
  }

  std::vector<NodeIndex> cores;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kind != NodeKind::CoreSwitch) continue;
    if (nodes[i].modulus < 2) {
      add(ViolationKind::InvalidModulus, std::nullopt,
          "core " + nodes[i].name + " has modulus " + std::to_string(nodes[i].modulus) + " (< 2)");
    } else {
      cores.push_back(static_cast<NodeIndex>(i));
    }
  }
  for (std::size_t i = 0; i < cores.size(); ++i) {
    for (std::size_t j = i + 1; j < cores.size(); ++j) {
      const auto& x = nodes[cores[i]];
      const auto& y = nodes[cores[j]];
      if (const auto g = std::gcd(x.modulus, y.modulus); g != 1) {
        add(ViolationKind::ModuliNotCoprime, std::nullopt,
            "cores " + x.name + " (" + std::to_string(x.modulus) + ") and " + y.name + " (" +
                std::to_string(y.modulus) + ") share factor " + std::to_string(g));
      }
    }
  }

  std::map<LinkEnd, std::size_t> used;
  std::vector<std::size_t> host_links(nodes.size(), 0);
  const auto& links = topology.links();
  for (std::size_t li = 0; li < links.size(); ++li) {
    const auto& l = links[li];
    if (!(l.capacity_bps > 0)) add(ViolationKind::InvalidLinkParameter, li, "link capacity must be > 0");
    if (!(l.propagation_delay_s >= 0)) add(ViolationKind::InvalidLinkParameter, li, "link delay must be >= 0");
    if (l.buffer_packets < 1) add(ViolationKind::InvalidLinkParameter, li, "link buffer must be >= 1 packet");
    if (l.a.node == l.b.node) add(ViolationKind::SelfLoop, li, "link connects " + nodes[l.a.node].name + " to itself");
    for (const auto& end : {l.a, l.b}) {
      const auto& n = nodes[end.node];
      if (auto [it, fresh] = used.try_emplace(end, li); !fresh) {
        add(ViolationKind::PortReused, li,
            n.name + ":" + std::to_string(end.port) + " already used by link " + std::to_string(it->second + 1));
      }
      if (n.kind == NodeKind::CoreSwitch && n.modulus >= 2 && end.port >= n.modulus) {
        add(ViolationKind::PortNotBelowModulus, li,
            "port " + std::to_string(end.port) + " on core " + n.name + " is not below its modulus " +
                std::to_string(n.modulus));
      }
      if (n.kind == NodeKind::Host) ++host_links[end.node];
    }
    const auto ka = nodes[l.a.node].kind;
    const auto kb = nodes[l.b.node].kind;
    if ((ka == NodeKind::Host && kb != NodeKind::EdgeSwitch) || (kb == NodeKind::Host && ka != NodeKind::EdgeSwitch)) {
      add(ViolationKind::HostAttachment, li, "hosts may only attach to edge switches");
    }
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kind == NodeKind::Host && host_links[i] != 1) {
      add(ViolationKind::HostAttachment, std::nullopt,
          "host " + nodes[i].name + " must have exactly one link, has " + std::to_string(host_links[i]));
    }
  }
  return report;
}

namespace {

NodeIndex attached_edge(const Topology& topology, NodeIndex host) {
  const auto& n = topology.node(host);
  if (n.kind != NodeKind::Host) throw Error(Errc::InvalidPath, n.name + " is not a host");
  const auto& ports = topology.ports(host);
  if (ports.empty()) throw Error(Errc::UnknownLink, "host " + n.name + " is not attached");
  const NodeIndex edge = ports.begin()->second.peer.node;
  if (topology.node(edge).kind != NodeKind::EdgeSwitch) {
    throw Error(Errc::InvalidPath, "host " + n.name + " is not attached to an edge switch");
  }
  return edge;
}

PortIndex require_port(const Topology& topology, NodeIndex from, NodeIndex to) {
  if (auto p = topology.port_towards(from, to)) return *p;
  throw Error(Errc::UnknownLink, "no link from " + topology.node(from).name + " to " + topology.node(to).name);
}

}  // namespace

Path make_path(const Topology& topology, NodeIndex src_host, NodeIndex dst_host,
               std::span<const std::string> core_names) {
  Path path;
  path.src_host = src_host;
  path.dst_host = dst_host;
  path.src_edge = attached_edge(topology, src_host);
  path.dst_edge = attached_edge(topology, dst_host);

  std::vector<NodeIndex> cores;
  for (const auto& name : core_names) {
    auto idx = topology.find(name);
    if (!idx) throw Error(Errc::UnknownNode, "unknown node " + name);
    if (topology.node(*idx).kind != NodeKind::CoreSwitch) throw Error(Errc::InvalidPath, name + " is not a core switch");
    cores.push_back(*idx);
  }
  if (cores.empty()) {
    if (path.src_edge != path.dst_edge) {
      throw Error(Errc::InvalidPath, "hosts on different edges need at least one core hop");
    }
    return path;
  }
  require_port(topology, path.src_edge, cores.front());
  for (std::size_t i = 0; i < cores.size(); ++i) {
    const NodeIndex next = i + 1 < cores.size() ? cores[i + 1] : path.dst_edge;
    path.core_hops.push_back({cores[i], require_port(topology, cores[i], next)});
  }
  return path;
}

std::vector<ResidueConstraint> path_to_constraints(const Path& path, const Topology& topology) {
  std::vector<ResidueConstraint> out;
  if (path.core_hops.empty()) return out;
  require_port(topology, path.src_edge, path.core_hops.front().core);
  out.reserve(path.core_hops.size());
  for (std::size_t i = 0; i < path.core_hops.size(); ++i) {
    const auto& hop = path.core_hops[i];
    const NodeIndex next = i + 1 < path.core_hops.size() ? path.core_hops[i + 1].core : path.dst_edge;
    const auto pp = topology.peer(hop.core, hop.egress);
    if (!pp || pp->peer.node != next) {
      throw Error(Errc::UnknownLink, topology.node(hop.core).name + " port " + std::to_string(hop.egress) +
                                         " does not lead to " + topology.node(next).name);
    }
    out.push_back({CoreSwitchId(topology.node(hop.core).modulus), hop.egress});
  }
  return out;
}

RouteId route_id_for_path(const Path& path, const Topology& topology) {
  const auto constraints = path_to_constraints(path, topology);
  if (constraints.empty()) return RouteId{};
  return crt_solve(constraints);
}

namespace {

struct PathSearch {
  const Topology& topology;
  NodeIndex dst_edge;
  std::size_t target_hops;
  std::vector<CoreHop> stack;
  std::vector<bool> on_path;
  std::vector<std::vector<CoreHop>> found;

  void visit(NodeIndex core) {
    on_path[core] = true;
    for (const auto& [port, pp] : topology.ports(core)) {
      const NodeIndex next = pp.peer.node;
      const auto kind = topology.node(next).kind;
      stack.push_back({core, port});
      if (stack.size() == target_hops) {
        if (next == dst_edge) found.push_back(stack);
      } else if (kind == NodeKind::CoreSwitch && !on_path[next]) {
        visit(next);
      }
      stack.pop_back();
    }
    on_path[core] = false;
  }
};

}  // namespace

std::vector<Path> enumerate_equal_length_paths(const Topology& topology, NodeIndex src_edge, NodeIndex dst_edge,
                                               const Path& current, std::size_t max_core_hops) {
  const std::size_t hops = current.core_hops.size();
  if (hops == 0 || hops > max_core_hops) return {};

  PathSearch search{topology, dst_edge, hops, {}, std::vector<bool>(topology.nodes().size(), false), {}};
  std::set<NodeIndex> first_cores;
  for (const auto& [port, pp] : topology.ports(src_edge)) {
    if (topology.node(pp.peer.node).kind == NodeKind::CoreSwitch) first_cores.insert(pp.peer.node);
  }
  for (const NodeIndex core : first_cores) search.visit(core);

  auto key = [&](const std::vector<CoreHop>& hs) {
    std::vector<std::uint64_t> moduli;
    std::vector<PortIndex> ports;
    for (const auto& h : hs) {
      moduli.push_back(topology.node(h.core).modulus);
      ports.push_back(h.egress);
    }
    return std::make_tuple(moduli, ports);
  };
  std::sort(search.found.begin(), search.found.end(),
            [&](const auto& x, const auto& y) { return key(x) < key(y); });
  search.found.erase(std::unique(search.found.begin(), search.found.end()), search.found.end());

  std::vector<Path> out;
  for (auto& hs : search.found) {
    if (hs == current.core_hops) continue;
    out.push_back({current.src_host, src_edge, std::move(hs), dst_edge, current.dst_host});
  }
  return out;
}

Path reverse_path(const Topology& topology, const Path& path) {
  Path rev{path.dst_host, path.dst_edge, {}, path.src_edge, path.src_host};
  const auto& hops = path.core_hops;
  for (std::size_t i = hops.size(); i-- > 0;) {
    const NodeIndex next = i > 0 ? hops[i - 1].core : path.src_edge;
    rev.core_hops.push_back({hops[i].core, require_port(topology, hops[i].core, next)});
  }
  return rev;
}

PortIndex uplink_port(const Topology& topology, const Path& path) {
  if (path.core_hops.empty()) throw Error(Errc::InvalidPath, "intra-edge path has no uplink");
  return require_port(topology, path.src_edge, path.core_hops.front().core);
}

PortIndex host_port(const Topology& topology, NodeIndex edge, NodeIndex host) {
  return require_port(topology, edge, host);
}

std::vector<DirectedLink> path_links(const Topology& topology, const Path& path) {
  std::vector<DirectedLink> out;
  out.push_back({path.src_host, require_port(topology, path.src_host, path.src_edge)});
  if (!path.core_hops.empty()) {
    out.push_back({path.src_edge, uplink_port(topology, path)});
    for (const auto& hop : path.core_hops) out.push_back({hop.core, hop.egress});
  }
  out.push_back({path.dst_edge, host_port(topology, path.dst_edge, path.dst_host)});
  return out;
}

bool is_core_link(const Topology& topology, DirectedLink link) {
  if (topology.node(link.from).kind != NodeKind::CoreSwitch) return false;
  const auto pp = topology.peer(link.from, link.port);
  return pp && topology.node(pp->peer.node).kind == NodeKind::CoreSwitch;
}

double min_path_capacity(const Topology& topology, const Path& path) {
  double cap = std::numeric_limits<double>::infinity();
  for (const auto& dl : path_links(topology, path)) {
    const auto pp = topology.peer(dl.from, dl.port);
    cap = std::min(cap, topology.link(pp->link).capacity_bps);
  }
  return cap;
}

std::string path_label(const Topology& topology, const Path& path) {
  std::string out;
  for (const auto& hop : path.core_hops) {
    if (!out.empty()) out += '>';
    out += topology.node(hop.core).name;
  }
  return out;
}

std::string describe(const Topology& topology, DirectedLink link) {
  std::string out = topology.node(link.from).name + ":" + std::to_string(link.port) + "->";
  if (const auto pp = topology.peer(link.from, link.port)) {
    out += topology.node(pp->peer.node).name + ":" + std::to_string(pp->peer.port);
  } else {
    out += "?";
  }
  return out;
}

Topology fig_topology(const FigTopologyParams& p) {
  Topology t;
  const auto vms1 = t.add_host("VMS1");
  const auto vms2 = t.add_host("VMS2");
  const auto vmd1 = t.add_host("VMD1");
  const auto vmd2 = t.add_host("VMD2");
  const auto e1 = t.add_edge("E1");
  const auto e2 = t.add_edge("E2");
  const auto s11 = t.add_core("S11", 11);
  const auto s13 = t.add_core("S13", 13);
  const auto s17 = t.add_core("S17", 17);
  const auto s19 = t.add_core("S19", 19);

  auto access = [&](LinkEnd a, LinkEnd b) {
    t.add_link(a, b, p.access_capacity_bps, p.propagation_delay_s, p.buffer_packets);
  };
  auto core = [&](LinkEnd a, LinkEnd b) {
    t.add_link(a, b, p.core_capacity_bps, p.propagation_delay_s, p.buffer_packets);
  };
  access({vms1, 0}, {e1, 1});
  access({vms2, 0}, {e1, 2});
  access({e1, 0}, {s11, 0});
  core({s11, 1}, {s19, 1});
  core({s11, 2}, {s13, 0});
  core({s19, 0}, {s17, 1});
  core({s13, 1}, {s17, 2});
  access({s17, 14}, {e2, 0});
  access({e2, 1}, {vmd1, 0});
  access({e2, 2}, {vmd2, 0});
  return t;
}

}  // namespace rdna
