// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "rdna/error.hpp"
#include "rdna/traffic_metrics.hpp"

using namespace rdna;

namespace {

FlowSpec cbr(double pps, double start, double stop, std::uint32_t size = 1518) {
  return {"f", FlowKind::Cbr, pps, 0, size, start, stop, "VMS1", "VMD2", 0};
}

FlowSpec probe(double period, double start, double stop, double jitter = 0) {
  return {"p", FlowKind::Probe, 0, period, kDefaultProbeSize, start, stop, "VMS2", "VMD1", jitter};
}

}  // namespace

TEST(SimTime, Conversions) {
  EXPECT_EQ(SimTime::from_seconds(1.5).ps(), 1'500'000'000'000);
  EXPECT_EQ(SimTime::from_seconds(30.0005).ps(), 30'000'500'000'000);
  EXPECT_DOUBLE_EQ(SimTime::from_ps(250'000'000).seconds(), 250e-6);
  EXPECT_EQ(format_seconds(SimTime::from_seconds(30.011)), "30.011000000");
  EXPECT_EQ(format_seconds(SimTime::from_ps(1'499)), "0.000000001");
  EXPECT_EQ(format_seconds(SimTime::from_ps(499)), "0.000000000");
}

TEST(SimTime, TransmissionTime) {
  EXPECT_EQ(transmission_time(1518, 930e6).ps(), 13'058'065);
  EXPECT_EQ(transmission_time(1518, 10e9).ps(), 1'214'400);
  EXPECT_EQ(transmission_time(98, 930e6).ps(), 843'011);
  EXPECT_EQ(transmission_time(125, 1e9).ps(), 1'000'000);
}

TEST(Cbr, RateConversion) {
  EXPECT_NEAR(pps_from_bps(100e6, 1518), 8234.519, 1e-3);
  EXPECT_NEAR(pps_from_bps(800e6, 1518), 65876.153, 1e-3);
  EXPECT_THROW(pps_from_bps(1e6, 0), Error);
}

TEST(Cbr, EmissionSchedule) {
  const auto spec = cbr(81274, 0, 60);
  EXPECT_EQ(cbr_emission_time(spec, 0).ps(), 0);
  EXPECT_EQ(cbr_emission_time(spec, 1).ps(), 12'304'058);
  EXPECT_EQ(cbr_packet_count(spec), 4'876'440u);
  const auto gap_spec = cbr(pps_from_bps(100e6, 1518), 0, 1);
  EXPECT_NEAR(static_cast<double>(cbr_emission_time(gap_spec, 1).ps()), 121.44e6, 1.0);
}

TEST(Cbr, CountMatchesStrictlyBeforeStop) {
  for (double pps : {1.0, 3.0, 7.0, 1000.0, 8234.519, 81274.0}) {
    for (double start : {0.0, 0.25, 2.0}) {
      const auto spec = cbr(pps, start, start + 2.0);
      const auto times = cbr_generate(spec);
      ASSERT_EQ(times.size(), cbr_packet_count(spec));
      if (!times.empty()) {
        EXPECT_LT(times.back(), SimTime::from_seconds(spec.stop_s));
        EXPECT_GE(cbr_emission_time(spec, times.size()), SimTime::from_seconds(spec.stop_s));
      }
      for (std::size_t i = 1; i < times.size(); ++i) ASSERT_LT(times[i - 1], times[i]);
    }
  }
  EXPECT_EQ(cbr_packet_count(cbr(10, 0, 1)), 10u);
  EXPECT_EQ(cbr_packet_count(cbr(0, 0, 1)), 0u);
  EXPECT_EQ(cbr_packet_count(cbr(10, 1, 1)), 0u);
}

TEST(Cbr, NoDriftOverLongRuns) {
  const auto spec = cbr(81274, 0, 60);
  // k / rate, exact in picoseconds up to one rounding step
  const std::uint64_t k = 4'876'439;
  const long double exact = static_cast<long double>(k) * 1e12L / 81274.0L;
  EXPECT_LE(std::abs(static_cast<long double>(cbr_emission_time(spec, k).ps()) - exact), 0.5L);
}

TEST(Probe, ScheduleWithoutJitter) {
  const auto times = probe_generate(probe(1.0, 0, 5), 1);
  ASSERT_EQ(times.size(), 5u);
  for (std::size_t i = 0; i < times.size(); ++i) EXPECT_EQ(times[i], SimTime::from_seconds(static_cast<double>(i)));
  EXPECT_TRUE(probe_generate(probe(0, 0, 5), 1).empty());
}

TEST(Probe, JitterBoundedAndSeeded) {
  const auto spec = probe(1.0, 0, 60, 1e-3);
  const auto a = probe_generate(spec, 1);
  const auto b = probe_generate(spec, 1);
  const auto c = probe_generate(spec, 2);
  ASSERT_EQ(a.size(), 60u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  std::set<std::int64_t> offsets;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto off = a[k] - SimTime::from_seconds(static_cast<double>(k));
    EXPECT_GE(off.ps(), 0);
    EXPECT_LE(off.ps(), 1'000'000'000);
    EXPECT_EQ(probe_send_time(spec, k, 1), a[k]);
    offsets.insert(off.ps());
  }
  EXPECT_GT(offsets.size(), 50u);
}

TEST(ThroughputWindows, Binning) {
  ThroughputWindows w(SimTime::from_seconds(1), 3, 2);
  w.add(SimTime::from_seconds(0.2), 0, 100);
  w.add(SimTime::from_seconds(1.0), 0, 10);  // left-closed windows
  w.add(SimTime::from_seconds(3.0), 1, 7);   // end of run folds into the last window
  w.add(SimTime::from_seconds(0.5), 5, 7);   // unknown flow ignored
  EXPECT_EQ(w.bits(0, 0), 100u);
  EXPECT_EQ(w.bits(1, 0), 10u);
  EXPECT_EQ(w.bits(2, 1), 7u);
  EXPECT_EQ(w.total_bits(0), 110u);
  EXPECT_DOUBLE_EQ(w.bits_per_second(0, 0), 100.0);
  EXPECT_THROW(ThroughputWindows(SimTime{}, 1, 1), Error);
}

TEST(ThroughputWindows, FromLogPreservesTotals) {
  std::vector<DeliveryRecord> log;
  std::uint64_t bytes = 0;
  for (int i = 0; i < 1000; ++i) {
    log.push_back({SimTime::from_seconds(i * 0.0049), static_cast<FlowId>(i % 2), 1518});
    bytes += 1518;
  }
  const auto w = window_throughput(log, SimTime::from_seconds(0.5), SimTime::from_seconds(4.9), 2);
  EXPECT_EQ(w.window_count(), 10u);
  EXPECT_EQ(w.total_bits(0) + w.total_bits(1), bytes * 8);
}

TEST(Loss, CausesAndOrdering) {
  EXPECT_EQ(to_string(LossCause::ProbeLost), "probe_lost");
  EXPECT_EQ(to_string(loss_cause(DropCause::DropTail)), "droptail");
  EXPECT_EQ(loss_cause(DropCause::Unmatched), LossCause::Unmatched);
  LossCounters lc;
  lc.add(2, 0, LossCause::Unmatched, 3);
  lc.add(0, 1, LossCause::DropTail);
  lc.add(0, 0, LossCause::Misroute);
  lc.add(2, 0, LossCause::Unmatched);
  lc.add(1, 0, LossCause::DropTail, 0);
  const auto rows = lc.rows();
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].flow, 0u);
  EXPECT_EQ(rows[0].cause, LossCause::Misroute);
  EXPECT_EQ(rows[1].flow, 1u);
  EXPECT_EQ(rows[2].count, 4u);
  EXPECT_EQ(lc.total(0, LossCause::Unmatched), 4u);
}

namespace {

class Forward : public DataplaneObserver {
 public:
  explicit Forward(ProbeSource& p) : p_(p) {}
  void on_delivered(const Packet& packet, NodeIndex host, SimTime now) override {
    p_.on_delivered(packet, host, now);
  }

 private:
  ProbeSource& p_;
};

void install_probe_rules(Simulation& sim, FlowId flow) {
  const auto& t = sim.topology();
  const auto vms2 = *t.find("VMS2");
  const auto vmd1 = *t.find("VMD1");
  const auto e1 = *t.find("E1");
  const auto e2 = *t.find("E2");
  auto rule = [&](NodeIndex edge, Direction dir, auto action, RouteId match) {
    sim.install_rule_at(SimTime{}, EdgeRule{edge, flow, dir, action, match}, RuleCause::Registration);
  };
  rule(e1, Direction::Forward, SetRouteField{RouteId(133), 0}, RouteId{});
  rule(e2, Direction::Forward, RestoreSource{Simulation::host_address(vms2), 1}, RouteId(133));
  rule(e2, Direction::Reverse, SetRouteField{RouteId(2585), 0}, RouteId{});
  rule(e1, Direction::Reverse, RestoreSource{Simulation::host_address(vmd1), 2}, RouteId(2585));
  sim.run_until(SimTime{});
}

}  // namespace

TEST(ProbeSource, IdleRttIsTwiceOneWayLatency) {
  Simulation sim(fig_topology());
  install_probe_rules(sim, 0);
  const auto& t = sim.topology();
  ProbeSource ps(sim, 0, *t.find("VMS2"), *t.find("VMD1"), probe(1.0, 0, 3), 1);
  Forward obs(ps);
  sim.set_observer(&obs);
  ps.start();
  sim.run_until(SimTime::from_seconds(4));
  ASSERT_EQ(ps.samples().size(), 3u);
  // per direction: four 98 B hops at 10 Gbps, two at 930 Mbps, six x 50 us
  const std::int64_t one_way = 4 * 78'400 + 2 * 843'011 + 6 * 50'000'000;
  for (const auto& s : ps.samples()) EXPECT_EQ(s.rtt.ps(), 2 * one_way);
  EXPECT_EQ(2 * one_way, 603'999'244);
  EXPECT_TRUE(ps.unanswered().empty());
  EXPECT_EQ(sim.counters().generated, 6u);
  EXPECT_EQ(sim.counters().delivered, 6u);
}

TEST(ProbeSource, MissingReverseRuleLeavesProbesUnanswered) {
  Simulation sim(fig_topology());
  const auto& t = sim.topology();
  sim.install_rule_at(SimTime{}, EdgeRule{*t.find("E1"), 0, Direction::Forward, SetRouteField{RouteId(133), 0}, {}},
                      RuleCause::Registration);
  sim.install_rule_at(SimTime{},
                      EdgeRule{*t.find("E2"), 0, Direction::Forward,
                               RestoreSource{Simulation::host_address(*t.find("VMS2")), 1}, RouteId(133)},
                      RuleCause::Registration);
  ProbeSource ps(sim, 0, *t.find("VMS2"), *t.find("VMD1"), probe(1.0, 0, 2), 1);
  Forward obs(ps);
  sim.set_observer(&obs);
  ps.start();
  sim.run_until(SimTime::from_seconds(3));
  EXPECT_TRUE(ps.samples().empty());
  EXPECT_EQ(ps.unanswered().size(), 2u);
  EXPECT_EQ(sim.unmatched_at(*t.find("E2")), 2u);
}
