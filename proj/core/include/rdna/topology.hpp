// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdna/residue_routing.hpp"

namespace rdna {

using NodeIndex = std::uint32_t;
using PortIndex = std::uint32_t;

enum class NodeKind { Host, EdgeSwitch, CoreSwitch };

std::string_view to_string(NodeKind kind) noexcept;

struct Node {
  NodeKind kind;
  std::string name;
  std::uint64_t modulus = 0;  // core switches only

  bool operator==(const Node&) const = default;
};

struct LinkEnd {
  NodeIndex node;
  PortIndex port;

  auto operator<=>(const LinkEnd&) const = default;
};

struct Link {
  LinkEnd a;
  LinkEnd b;
  double capacity_bps;
  double propagation_delay_s;
  std::uint32_t buffer_packets;

  bool operator==(const Link&) const = default;
};

// What sits behind an egress port.
struct PortPeer {
  std::size_t link;
  LinkEnd peer;
};

// One transmit direction of a link, named by its sending (node, port).
struct DirectedLink {
  NodeIndex from;
  PortIndex port;

  auto operator<=>(const DirectedLink&) const = default;
};

// Fabric graph. Construction is permissive so that malformed inputs can be
// reported by validate_topology() instead of failing half-way; only node
// indices are checked eagerly.
class Topology {
 public:
  NodeIndex add_host(std::string name);
  NodeIndex add_edge(std::string name);
  NodeIndex add_core(std::string name, std::uint64_t modulus);
  std::size_t add_link(LinkEnd a, LinkEnd b, double capacity_bps, double propagation_delay_s,
                       std::uint32_t buffer_packets);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Link>& links() const noexcept { return links_; }
  const Node& node(NodeIndex n) const { return nodes_.at(n); }
  const Link& link(std::size_t i) const { return links_.at(i); }

  std::optional<NodeIndex> find(std::string_view name) const;
  // First link declared on (node, port), if any.
  std::optional<PortPeer> peer(NodeIndex node, PortIndex port) const;
  // Wired ports of a node in ascending order.
  const std::map<PortIndex, PortPeer>& ports(NodeIndex node) const { return ports_.at(node); }
  // Lowest port of `from` wired to `to`.
  std::optional<PortIndex> port_towards(NodeIndex from, NodeIndex to) const;

  bool operator==(const Topology& o) const { return nodes_ == o.nodes_ && links_ == o.links_; }

 private:
  NodeIndex add_node(Node n);

  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<std::map<PortIndex, PortPeer>> ports_;
};

enum class ViolationKind {
  DuplicateName,
  InvalidModulus,
  ModuliNotCoprime,
  PortNotBelowModulus,
  PortReused,
  SelfLoop,
  InvalidLinkParameter,
  HostAttachment,
};

struct Violation {
  ViolationKind kind;
  std::optional<std::size_t> link;  // offending link, when there is one
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate_topology(const Topology& topology);

struct CoreHop {
  NodeIndex core;
  PortIndex egress;

  auto operator<=>(const CoreHop&) const = default;
};

struct Path {
  NodeIndex src_host;
  NodeIndex src_edge;
  std::vector<CoreHop> core_hops;
  NodeIndex dst_edge;
  NodeIndex dst_host;

  bool operator==(const Path&) const = default;
};

// Resolve a path from host endpoints and the ordered core switch names.
// Throws UnknownNode / InvalidPath / UnknownLink.
Path make_path(const Topology& topology, NodeIndex src_host, NodeIndex dst_host,
               std::span<const std::string> core_names);

// Throws UnknownLink when a hop is not physically connected as stated.
std::vector<ResidueConstraint> path_to_constraints(const Path& path, const Topology& topology);

// Route id of the path; RouteId{0} for a path with no core hops.
RouteId route_id_for_path(const Path& path, const Topology& topology);

// All loop-free edge-to-edge paths with the same number of core hops as
// `current`, minus `current`, ordered by core modulus sequence (ports break
// remaining ties). Host endpoints are copied from `current`.
std::vector<Path> enumerate_equal_length_paths(const Topology& topology, NodeIndex src_edge, NodeIndex dst_edge,
                                               const Path& current, std::size_t max_core_hops = 6);

// Same cores in reverse order with the reverse-direction egress ports.
Path reverse_path(const Topology& topology, const Path& path);

// Every transmit direction the path uses, host to host.
std::vector<DirectedLink> path_links(const Topology& topology, const Path& path);

bool is_core_link(const Topology& topology, DirectedLink link);

PortIndex uplink_port(const Topology& topology, const Path& path);
PortIndex host_port(const Topology& topology, NodeIndex edge, NodeIndex host);

double min_path_capacity(const Topology& topology, const Path& path);

// "S11>S19>S17"; empty for intra-edge paths.
std::string path_label(const Topology& topology, const Path& path);
std::string describe(const Topology& topology, DirectedLink link);

struct FigTopologyParams {
  double core_capacity_bps = 930e6;
  double access_capacity_bps = 10e9;
  double propagation_delay_s = 50e-6;
  std::uint32_t buffer_packets = 1000;
};

// Two edges (E1 with VMS1/VMS2, E2 with VMD1/VMD2) joined by a core diamond
// S11 -> {S19, S13} -> S17. Ports are laid out so that the path
// S11 -> S19 -> S17 has route id 133 (S11 port 1, S19 port 0, S17 port 14).
Topology fig_topology(const FigTopologyParams& params = {});

}  // namespace rdna
