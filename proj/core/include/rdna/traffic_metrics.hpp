// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "rdna/dataplane.hpp"
#include "rdna/sim_time.hpp"

namespace rdna {

enum class FlowKind { Cbr, Probe };

struct FlowSpec {
  std::string id;
  FlowKind kind = FlowKind::Cbr;
  double rate_pps = 0;  // Cbr
  double period_s = 0;  // Probe
  std::uint32_t packet_size = 0;
  double start_s = 0;
  double stop_s = 0;
  std::string src;
  std::string dst;
  // Probe only: each request is delayed by a seeded uniform offset in
  // [0, jitter_s) past its nominal send time.
  double jitter_s = 0;

  bool operator==(const FlowSpec&) const = default;
};

inline constexpr std::uint32_t kDefaultProbeSize = 98;

double pps_from_bps(double bits_per_second, std::uint32_t packet_size);

// Emission k of a constant-rate flow, computed from k directly so rounding
// never accumulates.
SimTime cbr_emission_time(const FlowSpec& spec, std::uint64_t k);
// Number of k with cbr_emission_time(k) < stop.
std::uint64_t cbr_packet_count(const FlowSpec& spec);
std::vector<SimTime> cbr_generate(const FlowSpec& spec);

SimTime probe_send_time(const FlowSpec& spec, std::uint64_t k, std::uint64_t seed);
std::vector<SimTime> probe_generate(const FlowSpec& spec, std::uint64_t seed);

struct RttSample {
  SimTime sent;
  FlowId flow;
  SimTime rtt;
};

// Delivered bits per fixed-width window, aligned to t = 0.
class ThroughputWindows {
 public:
  ThroughputWindows(SimTime width, std::size_t windows, std::size_t flows);

  void add(SimTime at, FlowId flow, std::uint64_t bits);

  SimTime width() const noexcept { return width_; }
  std::size_t window_count() const noexcept { return windows_; }
  std::size_t flow_count() const noexcept { return flows_; }
  std::uint64_t bits(std::size_t window, FlowId flow) const { return bits_.at(window * flows_ + flow); }
  double bits_per_second(std::size_t window, FlowId flow) const;
  std::uint64_t total_bits(FlowId flow) const;

 private:
  SimTime width_;
  std::size_t windows_;
  std::size_t flows_;
  std::vector<std::uint64_t> bits_;
};

struct DeliveryRecord {
  SimTime at;
  FlowId flow;
  std::uint64_t bytes;
};

ThroughputWindows window_throughput(std::span<const DeliveryRecord> log, SimTime width, SimTime duration,
                                    std::size_t flows);

enum class LossCause : std::uint8_t { DropTail, Unmatched, Misroute, ProbeLost };
std::string_view to_string(LossCause cause) noexcept;
LossCause loss_cause(DropCause cause) noexcept;

struct LossRow {
  std::size_t interval;
  FlowId flow;
  LossCause cause;
  std::uint64_t count;
};

class LossCounters {
 public:
  void add(std::size_t interval, FlowId flow, LossCause cause, std::uint64_t n = 1);
  // Non-zero counters ordered by (interval, flow, cause).
  std::vector<LossRow> rows() const;
  std::uint64_t total(FlowId flow, LossCause cause) const;

 private:
  std::map<std::tuple<std::size_t, FlowId, LossCause>, std::uint64_t> counts_;
};

// Constant-bit-rate source feeding a host NIC, one timer per packet.
class CbrSource : public TimerClient {
 public:
  CbrSource(Simulation& sim, FlowId flow, NodeIndex src_host, NodeIndex dst_host, FlowSpec spec);

  void start();
  void on_timer(std::uint64_t k, SimTime now) override;
  std::uint64_t emitted() const noexcept { return emitted_; }

 private:
  Simulation& sim_;
  FlowId flow_;
  NodeIndex src_host_;
  NodeIndex dst_host_;
  FlowSpec spec_;
  std::uint64_t count_;
  std::uint64_t emitted_ = 0;
};

// Echo-style probe: request every period, the destination host answers at
// once on the reverse direction, RTT is taken when the reply reaches the
// source host.
class ProbeSource : public TimerClient {
 public:
  ProbeSource(Simulation& sim, FlowId flow, NodeIndex src_host, NodeIndex dst_host, FlowSpec spec,
              std::uint64_t seed);

  void start();
  void on_timer(std::uint64_t k, SimTime now) override;
  // Call from the dataplane observer for every delivered packet of this flow.
  void on_delivered(const Packet& packet, NodeIndex host, SimTime now);

  const std::vector<RttSample>& samples() const noexcept { return samples_; }
  // Nominal schedule; entries are meaningful once their timer has fired.
  const std::vector<SimTime>& sent() const noexcept { return sent_; }
  // Requests whose reply never came back.
  std::vector<SimTime> unanswered() const;

 private:
  Simulation& sim_;
  FlowId flow_;
  NodeIndex src_host_;
  NodeIndex dst_host_;
  FlowSpec spec_;
  std::uint64_t seed_;
  std::vector<SimTime> sent_;
  std::vector<bool> fired_;
  std::vector<bool> answered_;
  std::vector<RttSample> samples_;
};

}  // namespace rdna
