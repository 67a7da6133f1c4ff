// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "rdna/error.hpp"
#include "rdna/dataplane.hpp"
#include "rdna/traffic_metrics.hpp"

using namespace rdna;

namespace {

struct Fig {
  Topology topo = fig_topology();
  NodeIndex vms1 = *topo.find("VMS1");
  NodeIndex vms2 = *topo.find("VMS2");
  NodeIndex vmd2 = *topo.find("VMD2");
  NodeIndex e1 = *topo.find("E1");
  NodeIndex e2 = *topo.find("E2");
  NodeIndex s11 = *topo.find("S11");
  NodeIndex s13 = *topo.find("S13");
  NodeIndex s17 = *topo.find("S17");
  NodeIndex s19 = *topo.find("S19");
};

constexpr FlowId kFlow = 0;

Packet data_packet(NodeIndex src, std::uint32_t size = 1518, std::uint64_t seq = 0) {
  Packet p;
  p.flow = kFlow;
  p.size = size;
  p.src_field = Simulation::host_address(src);
  p.original_src = p.src_field;
  p.seq = seq;
  return p;
}

EdgeRule source_rule(NodeIndex edge, RouteId route, PortIndex uplink) {
  return {edge, kFlow, Direction::Forward, SetRouteField{route, uplink}, RouteId{}};
}

EdgeRule restore_rule(NodeIndex edge, RouteId route, MacAddress original, PortIndex host_port) {
  return {edge, kFlow, Direction::Forward, RestoreSource{original, host_port}, route};
}

// Rules for VMS1 -> VMD2 over S11 > S19 > S17, active at t = 0.
void install_primary(Simulation& sim, const Fig& f) {
  sim.install_rule_at(SimTime{}, source_rule(f.e1, RouteId(133), 0), RuleCause::Registration);
  sim.install_rule_at(SimTime{}, restore_rule(f.e2, RouteId(133), Simulation::host_address(f.vms1), 2),
                      RuleCause::Registration);
  sim.run_until(SimTime{});
}

class Recorder : public DataplaneObserver {
 public:
  void on_delivered(const Packet& p, NodeIndex host, SimTime now) override { delivered.push_back({p, host, now}); }
  void on_dropped(const Packet& p, NodeIndex node, DropCause cause, SimTime now) override {
    dropped.push_back({p, node, cause, now});
  }
  struct Delivery {
    Packet packet;
    NodeIndex host;
    SimTime at;
  };
  struct Drop {
    Packet packet;
    NodeIndex node;
    DropCause cause;
    SimTime at;
  };
  std::vector<Delivery> delivered;
  std::vector<Drop> dropped;
};

std::int64_t ser_ps(std::uint64_t bytes, double bps) {
  return std::llround(static_cast<double>(bytes) * 8.0 / bps * 1e12);
}

bool conserved(const Simulation& sim) {
  const auto& c = sim.counters();
  return c.generated == c.delivered + c.total_dropped() + sim.in_flight();
}

}  // namespace

TEST(EdgeIngress, WritesRouteFieldAndUsesUplink) {
  Fig f;
  Simulation sim(f.topo);
  install_primary(sim, f);
  const auto d = sim.edge_ingress(data_packet(f.vms1), f.e1);
  EXPECT_EQ(d.outcome, ForwardDecision::Outcome::Enqueue);
  EXPECT_EQ(d.port, 0u);
  EXPECT_EQ(to_string(d.src_field), "00:00:00:00:00:85");
  EXPECT_EQ(sim.flow_counters(kFlow).ingress_packets, 1u);
  EXPECT_EQ(sim.flow_counters(kFlow).ingress_bytes, 1518u);
}

TEST(EdgeIngress, UnmatchedFlowIsDropped) {
  Fig f;
  Simulation sim(f.topo);
  const auto d = sim.edge_ingress(data_packet(f.vms1), f.e1);
  EXPECT_EQ(d.outcome, ForwardDecision::Outcome::Drop);
  EXPECT_EQ(d.cause, DropCause::Unmatched);
  EXPECT_EQ(sim.unmatched_at(f.e1), 1u);
  EXPECT_EQ(sim.counters().dropped[static_cast<std::size_t>(DropCause::Unmatched)], 1u);
}

TEST(EdgeIngress, PacketArrivingBeforeInstallIsDropped) {
  Fig f;
  Simulation sim(f.topo);
  sim.install_rule_at(SimTime::from_seconds(1e-3), source_rule(f.e1, RouteId(133), 0), RuleCause::Registration);
  sim.send_from_host(f.vms1, data_packet(f.vms1));
  sim.run_until(SimTime::from_seconds(0.5e-3));
  EXPECT_EQ(sim.unmatched_at(f.e1), 1u);
  EXPECT_FALSE(sim.source_rule(f.e1, kFlow, Direction::Forward).has_value());
  sim.run_until(SimTime::from_seconds(2e-3));
  EXPECT_TRUE(sim.source_rule(f.e1, kFlow, Direction::Forward).has_value());
}

TEST(CoreForward, ModuloSelectsPort) {
  Fig f;
  Simulation sim(f.topo);
  auto p = data_packet(f.vms1);
  p.src_field = encode_route_field(RouteId(133));
  EXPECT_EQ(sim.core_forward(p, f.s11).port, 1u);
  EXPECT_EQ(sim.core_forward(p, f.s19).port, 0u);
  EXPECT_EQ(sim.core_forward(p, f.s17).port, 14u);
  p.src_field = encode_route_field(RouteId(2224));
  EXPECT_EQ(sim.core_forward(p, f.s11).port, 2u);
  EXPECT_EQ(sim.core_forward(p, f.s13).port, 1u);
  p.src_field = encode_route_field(RouteId(1));
  EXPECT_EQ(sim.core_forward(p, f.s11).port, 1u);
}

TEST(CoreForward, PureFunctionMatchesModulo) {
  Fig f;
  for (std::uint64_t r = 0; r < 5000; ++r) {
    const auto port = core_egress_port(f.topo, f.s11, encode_route_field(RouteId(r)));
    const auto want = r % 11;
    if (want <= 2) {
      ASSERT_EQ(port, want);
    } else {
      ASSERT_FALSE(port.has_value()) << r;
    }
  }
}

TEST(CoreForward, DeadPortIsMisroute) {
  Fig f;
  Simulation sim(f.topo);
  auto p = data_packet(f.vms1);
  p.src_field = encode_route_field(RouteId(5));  // 5 mod 11 = 5, unwired
  const auto d = sim.core_forward(p, f.s11);
  EXPECT_EQ(d.outcome, ForwardDecision::Outcome::Drop);
  EXPECT_EQ(d.cause, DropCause::Misroute);
}

TEST(CoreForward, LoopIsCutByHopLimit) {
  Fig f;
  Simulation sim(f.topo);
  // Route 1: S11 -> port 1 -> S19, S19 -> port 1 -> S11, forever.
  sim.install_rule_at(SimTime{}, source_rule(f.e1, RouteId(1), 0), RuleCause::Registration);
  sim.run_until(SimTime{});
  sim.send_from_host(f.vms1, data_packet(f.vms1));
  sim.run_until(SimTime::from_seconds(1.0));
  EXPECT_EQ(sim.counters().dropped[static_cast<std::size_t>(DropCause::Misroute)], 1u);
  EXPECT_EQ(sim.counters().delivered, 0u);
  EXPECT_EQ(sim.in_flight(), 0u);
}

TEST(EdgeEgress, RestoresOriginalSource) {
  Fig f;
  Simulation sim(f.topo);
  install_primary(sim, f);
  auto p = data_packet(f.vms1);
  p.src_field = encode_route_field(RouteId(133));
  const auto d = sim.edge_egress(p, f.e2);
  EXPECT_EQ(d.outcome, ForwardDecision::Outcome::Enqueue);
  EXPECT_EQ(d.port, 2u);
  EXPECT_EQ(d.src_field, Simulation::host_address(f.vms1));
}

TEST(EdgeEgress, UnknownRouteIsUnmatched) {
  Fig f;
  Simulation sim(f.topo);
  install_primary(sim, f);
  auto p = data_packet(f.vms1);
  p.src_field = encode_route_field(RouteId(2224));
  const auto d = sim.edge_egress(p, f.e2);
  EXPECT_EQ(d.cause, DropCause::Unmatched);
  EXPECT_EQ(sim.unmatched_at(f.e2), 1u);
}

TEST(EdgeEgress, TwoRestoreRulesCoexist) {
  Fig f;
  Simulation sim(f.topo);
  install_primary(sim, f);
  sim.install_rule_at(SimTime{}, restore_rule(f.e2, RouteId(2224), Simulation::host_address(f.vms1), 2),
                      RuleCause::Migration);
  sim.run_until(SimTime{});
  for (auto r : {133u, 2224u}) {
    auto p = data_packet(f.vms1);
    p.src_field = encode_route_field(RouteId(r));
    EXPECT_EQ(sim.edge_egress(p, f.e2).outcome, ForwardDecision::Outcome::Enqueue) << r;
  }
}

TEST(Rules, CoreNodesRejectRules) {
  Fig f;
  Simulation sim(f.topo);
  EXPECT_THROW(sim.install_rule_at(SimTime{}, source_rule(f.s11, RouteId(133), 0), RuleCause::Registration),
               Error);
  EXPECT_THROW(sim.remove_rule_at(SimTime{}, source_rule(f.vms1, RouteId(133), 0), RuleCause::Registration),
               Error);
  try {
    sim.install_rule_at(SimTime{}, source_rule(f.s17, RouteId(133), 0), RuleCause::Registration);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidRule);
  }
}

TEST(Rules, RemovalAndLog) {
  Fig f;
  Simulation sim(f.topo);
  install_primary(sim, f);
  sim.remove_rule_at(SimTime::from_seconds(1), source_rule(f.e1, RouteId(133), 0), RuleCause::Migration);
  sim.run_until(SimTime::from_seconds(2));
  EXPECT_FALSE(sim.source_rule(f.e1, kFlow, Direction::Forward).has_value());
  ASSERT_EQ(sim.rule_log().size(), 3u);
  EXPECT_EQ(sim.rule_log()[2].op, RuleOp::Remove);
  EXPECT_EQ(sim.rule_log()[2].time, SimTime::from_seconds(1));
  EXPECT_EQ(sim.rule_log()[2].node, f.e1);
}

TEST(Enqueue, SerializationTime) {
  Fig f;
  Simulation sim(f.topo);
  EXPECT_TRUE(sim.enqueue(data_packet(f.vms1), f.s11, 1));
  EXPECT_EQ(sim.queue({f.s11, 1}).busy_until.ps(), 13'058'065);  // 1518 B at 930 Mbps
  EXPECT_EQ(sim.queue({f.s11, 1}).occupancy, 1u);
  EXPECT_TRUE(sim.enqueue(data_packet(f.vms1), f.s11, 1));
  EXPECT_EQ(sim.queue({f.s11, 1}).busy_until.ps(), 2 * 13'058'065);
}

TEST(Enqueue, DropTailWhenFullAndDrainTime) {
  Fig f;
  Simulation sim(f.topo);
  for (int i = 0; i < 1000; ++i) ASSERT_TRUE(sim.enqueue(data_packet(f.vms1), f.s11, 1));
  EXPECT_FALSE(sim.enqueue(data_packet(f.vms1), f.s11, 1));
  EXPECT_EQ(sim.droptail_losses({f.s11, 1}, kFlow), 1u);
  EXPECT_EQ(sim.counters().dropped[static_cast<std::size_t>(DropCause::DropTail)], 1u);
  // 1000 x 13.058064516 us, within 1 ps per packet of rounding
  const std::int64_t busy = sim.queue({f.s11, 1}).busy_until.ps();
  EXPECT_NEAR(static_cast<double>(busy), 13'058'064'516.0, 1000.0);
  sim.run_until(SimTime::from_ps(busy));
  EXPECT_EQ(sim.queue({f.s11, 1}).occupancy, 0u);
  EXPECT_EQ(sim.tx_bytes({f.s11, 1}), 1000u * 1518u);
}

TEST(Enqueue, UnwiredPortIsMisroute) {
  Fig f;
  Simulation sim(f.topo);
  EXPECT_FALSE(sim.enqueue(data_packet(f.vms1), f.s11, 7));
  EXPECT_EQ(sim.counters().dropped[static_cast<std::size_t>(DropCause::Misroute)], 1u);
}

TEST(Simulation, RunUntilEmptyQueueAdvancesClock) {
  Fig f;
  Simulation sim(f.topo);
  sim.run_until(SimTime::from_seconds(3));
  EXPECT_EQ(sim.now(), SimTime::from_seconds(3));
  EXPECT_EQ(sim.pending_events(), 0u);
}

TEST(Simulation, EventOverflow) {
  Fig f;
  Simulation sim(f.topo, SimulationConfig{4, 64});
  try {
    for (int i = 0; i < 10; ++i) sim.enqueue(data_packet(f.vms1), f.s11, 1);
    FAIL() << "expected EventOverflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EventOverflow);
  }
}

TEST(Simulation, SinglePacketLatencyOnIdlePath) {
  Fig f;
  Simulation sim(f.topo);
  install_primary(sim, f);
  Recorder rec;
  sim.set_observer(&rec);
  sim.send_from_host(f.vms1, data_packet(f.vms1));
  sim.run_until(SimTime::from_seconds(1));
  ASSERT_EQ(rec.delivered.size(), 1u);
  EXPECT_EQ(rec.delivered[0].host, f.vmd2);
  EXPECT_EQ(rec.delivered[0].packet.src_field, Simulation::host_address(f.vms1));
  // four 10 Gbps hops, two 930 Mbps hops, six 50 us propagation delays
  const std::int64_t expect = 4 * ser_ps(1518, 10e9) + 2 * ser_ps(1518, 930e6) + 6 * 50'000'000;
  EXPECT_EQ(rec.delivered[0].at.ps(), expect);
  EXPECT_EQ(expect, 330'973'730);
}

TEST(Simulation, FifoOrderAndLatencyLowerBound) {
  Fig f;
  Simulation sim(f.topo);
  install_primary(sim, f);
  Recorder rec;
  sim.set_observer(&rec);
  FlowSpec spec{"f", FlowKind::Cbr, 81274, 0, 1518, 0, 0.05, "VMS1", "VMD2", 0};
  CbrSource src(sim, kFlow, f.vms1, f.vmd2, spec);
  src.start();
  sim.run_until(SimTime::from_seconds(1));
  ASSERT_EQ(rec.delivered.size(), src.emitted());
  for (std::size_t i = 0; i < rec.delivered.size(); ++i) {
    EXPECT_EQ(rec.delivered[i].packet.seq, i);
    EXPECT_GE((rec.delivered[i].at - rec.delivered[i].packet.created_at).ps(), 330'973'730);
  }
}

TEST(Simulation, ConservationHoldsAtEveryCheckpoint) {
  Fig f;
  Simulation sim(f.topo);
  install_primary(sim, f);
  // 1 Gbps offered into a 930 Mbps bottleneck, plus a rule removal mid-run.
  FlowSpec spec{"f", FlowKind::Cbr, pps_from_bps(1e9, 1518), 0, 1518, 0, 0.5, "VMS1", "VMD2", 0};
  CbrSource src(sim, kFlow, f.vms1, f.vmd2, spec);
  src.start();
  sim.remove_rule_at(SimTime::from_seconds(0.4),
                     restore_rule(f.e2, RouteId(133), Simulation::host_address(f.vms1), 2), RuleCause::Migration);
  for (int i = 1; i <= 60; ++i) {
    sim.run_until(SimTime::from_seconds(0.01 * i));
    ASSERT_TRUE(conserved(sim)) << "at " << 0.01 * i;
  }
  EXPECT_GT(sim.counters().dropped[static_cast<std::size_t>(DropCause::DropTail)], 0u);
  EXPECT_GT(sim.counters().dropped[static_cast<std::size_t>(DropCause::Unmatched)], 0u);
  EXPECT_EQ(sim.in_flight(), 0u);
}

TEST(Simulation, DeterministicAcrossRuns) {
  auto run = [] {
    Fig f;
    Simulation sim(f.topo);
    install_primary(sim, f);
    Recorder rec;
    sim.set_observer(&rec);
    FlowSpec spec{"f", FlowKind::Cbr, 90000, 0, 1518, 0, 0.2, "VMS1", "VMD2", 0};
    CbrSource src(sim, kFlow, f.vms1, f.vmd2, spec);
    src.start();
    sim.run_until(SimTime::from_seconds(0.5));
    std::vector<std::pair<std::uint64_t, std::int64_t>> out;
    for (const auto& d : rec.delivered) out.emplace_back(d.packet.seq, d.at.ps());
    return std::make_pair(out, sim.counters().total_dropped());
  };
  EXPECT_EQ(run(), run());
}

// Installing and removing arbitrary edge rules never changes how a core
// switch forwards a given route field.
TEST(Simulation, CoreSwitchesAreStateless) {
  Fig f;
  Simulation sim(f.topo);
  std::mt19937_64 rng(3);
  std::vector<MacAddress> fields;
  for (int i = 0; i < 200; ++i) fields.push_back(encode_route_field(RouteId(rng() % 100000)));
  auto snapshot = [&] {
    std::vector<std::optional<PortIndex>> out;
    for (const auto core : {f.s11, f.s13, f.s17, f.s19}) {
      for (const auto& fld : fields) out.push_back(core_egress_port(sim.topology(), core, fld));
    }
    return out;
  };
  const auto before = snapshot();
  for (int i = 0; i < 50; ++i) {
    const auto edge = (i % 2) ? f.e1 : f.e2;
    EdgeRule r = source_rule(edge, RouteId(rng() % 5000), 0);
    r.flow = static_cast<FlowId>(i);
    sim.install_rule_at(sim.now(), r, RuleCause::Registration);
    sim.run_until(sim.now());
  }
  EXPECT_EQ(snapshot(), before);
}

TEST(Simulation, IntraEdgeFlowSkipsCore) {
  Fig f;
  Simulation sim(f.topo);
  sim.install_rule_at(SimTime{}, {f.e1, kFlow, Direction::Forward, SetRouteField{RouteId{}, std::nullopt}, RouteId{}},
                      RuleCause::Registration);
  sim.install_rule_at(SimTime{}, restore_rule(f.e1, RouteId{}, Simulation::host_address(f.vms1), 2),
                      RuleCause::Registration);
  sim.run_until(SimTime{});
  Recorder rec;
  sim.set_observer(&rec);
  sim.send_from_host(f.vms1, data_packet(f.vms1));
  sim.run_until(SimTime::from_seconds(1));
  ASSERT_EQ(rec.delivered.size(), 1u);
  EXPECT_EQ(rec.delivered[0].host, f.vms2);
}
