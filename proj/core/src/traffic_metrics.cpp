// SPDX-License-Identifier: Apache-2.0
#include "rdna/traffic_metrics.hpp"

#include <cmath>
#include <random>

#include "rdna/error.hpp"

namespace rdna {

double pps_from_bps(double bits_per_second, std::uint32_t packet_size) {
  if (packet_size == 0) throw Error(Errc::InvalidArgument, "packet size must be > 0");
  return bits_per_second / (static_cast<double>(packet_size) * 8.0);
}

SimTime cbr_emission_time(const FlowSpec& spec, std::uint64_t k) {
  const long double offset =
      static_cast<long double>(k) * static_cast<long double>(SimTime::kPerSecond) / spec.rate_pps;
  return SimTime::from_seconds(spec.start_s) + SimTime::from_ps(std::llroundl(offset));
}

std::uint64_t cbr_packet_count(const FlowSpec& spec) {
  if (!(spec.rate_pps > 0) || !(spec.stop_s > spec.start_s)) return 0;
  const SimTime stop = SimTime::from_seconds(spec.stop_s);
  auto n = static_cast<std::uint64_t>(std::ceil((spec.stop_s - spec.start_s) * spec.rate_pps));
  while (n > 0 && cbr_emission_time(spec, n - 1) >= stop) --n;
  while (cbr_emission_time(spec, n) < stop) ++n;
  return n;
}

std::vector<SimTime> cbr_generate(const FlowSpec& spec) {
  std::vector<SimTime> out;
  const auto n = cbr_packet_count(spec);
  out.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) out.push_back(cbr_emission_time(spec, k));
  return out;
}

SimTime probe_send_time(const FlowSpec& spec, std::uint64_t k, std::uint64_t seed) {
  SimTime t = SimTime::from_seconds(spec.start_s + static_cast<double>(k) * spec.period_s);
  if (spec.jitter_s > 0) {
    // One generator per (seed, k) so that send times do not depend on how
    // many probes were drawn before.
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (k + 1)));
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    t += SimTime::from_seconds(u * spec.jitter_s);
  }
  return t;
}

std::vector<SimTime> probe_generate(const FlowSpec& spec, std::uint64_t seed) {
  std::vector<SimTime> out;
  if (!(spec.period_s > 0)) return out;
  const SimTime stop = SimTime::from_seconds(spec.stop_s);
  for (std::uint64_t k = 0;; ++k) {
    if (SimTime::from_seconds(spec.start_s + static_cast<double>(k) * spec.period_s) >= stop) break;
    const SimTime t = probe_send_time(spec, k, seed);
    if (t < stop) out.push_back(t);
  }
  return out;
}

ThroughputWindows::ThroughputWindows(SimTime width, std::size_t windows, std::size_t flows)
    : width_(width), windows_(windows), flows_(flows), bits_(windows * flows, 0) {
  if (width.ps() <= 0) throw Error(Errc::InvalidArgument, "window width must be > 0");
}

void ThroughputWindows::add(SimTime at, FlowId flow, std::uint64_t bits) {
  if (windows_ == 0 || flow >= flows_) return;
  auto w = static_cast<std::size_t>(at.ps() < 0 ? 0 : at.ps() / width_.ps());
  if (w >= windows_) w = windows_ - 1;  // deliveries at exactly t_end
  bits_[w * flows_ + flow] += bits;
}

double ThroughputWindows::bits_per_second(std::size_t window, FlowId flow) const {
  return static_cast<double>(bits(window, flow)) / width_.seconds();
}

std::uint64_t ThroughputWindows::total_bits(FlowId flow) const {
  std::uint64_t sum = 0;
  for (std::size_t w = 0; w < windows_; ++w) sum += bits(w, flow);
  return sum;
}

ThroughputWindows window_throughput(std::span<const DeliveryRecord> log, SimTime width, SimTime duration,
                                    std::size_t flows) {
  const auto windows = static_cast<std::size_t>((duration.ps() + width.ps() - 1) / width.ps());
  ThroughputWindows out(width, windows, flows);
  for (const auto& d : log) out.add(d.at, d.flow, d.bytes * 8);
  return out;
}

std::string_view to_string(LossCause cause) noexcept {
  switch (cause) {
    case LossCause::DropTail: return "droptail";
    case LossCause::Unmatched: return "unmatched";
    case LossCause::Misroute: return "misroute";
    case LossCause::ProbeLost: return "probe_lost";
  }
  return "?";
}

LossCause loss_cause(DropCause cause) noexcept {
  switch (cause) {
    case DropCause::DropTail: return LossCause::DropTail;
    case DropCause::Unmatched: return LossCause::Unmatched;
    case DropCause::Misroute: return LossCause::Misroute;
  }
  return LossCause::Misroute;
}

void LossCounters::add(std::size_t interval, FlowId flow, LossCause cause, std::uint64_t n) {
  counts_[{interval, flow, cause}] += n;
}

std::vector<LossRow> LossCounters::rows() const {
  std::vector<LossRow> out;
  for (const auto& [key, n] : counts_) {
    if (n == 0) continue;
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), n});
  }
  return out;
}

std::uint64_t LossCounters::total(FlowId flow, LossCause cause) const {
  std::uint64_t sum = 0;
  for (const auto& [key, n] : counts_) {
    if (std::get<1>(key) == flow && std::get<2>(key) == cause) sum += n;
  }
  return sum;
}

CbrSource::CbrSource(Simulation& sim, FlowId flow, NodeIndex src_host, NodeIndex dst_host, FlowSpec spec)
    : sim_(sim), flow_(flow), src_host_(src_host), dst_host_(dst_host), spec_(std::move(spec)),
      count_(cbr_packet_count(spec_)) {}

void CbrSource::start() {
  if (count_ > 0) sim_.schedule_timer(cbr_emission_time(spec_, 0), this, 0);
}

void CbrSource::on_timer(std::uint64_t k, SimTime now) {
  Packet p;
  p.flow = flow_;
  p.kind = PacketKind::Data;
  p.size = spec_.packet_size;
  p.src_field = Simulation::host_address(src_host_);
  p.original_src = p.src_field;
  p.dst_field = Simulation::host_address(dst_host_);
  p.seq = k;
  p.created_at = now;
  sim_.send_from_host(src_host_, p);
  ++emitted_;
  if (k + 1 < count_) sim_.schedule_timer(cbr_emission_time(spec_, k + 1), this, k + 1);
}

ProbeSource::ProbeSource(Simulation& sim, FlowId flow, NodeIndex src_host, NodeIndex dst_host, FlowSpec spec,
                         std::uint64_t seed)
    : sim_(sim), flow_(flow), src_host_(src_host), dst_host_(dst_host), spec_(std::move(spec)), seed_(seed) {}

void ProbeSource::start() {
  const auto times = probe_generate(spec_, seed_);
  sent_.assign(times.size(), SimTime{});
  fired_.assign(times.size(), false);
  answered_.assign(times.size(), false);
  for (std::uint64_t k = 0; k < times.size(); ++k) sim_.schedule_timer(times[k], this, k);
}

void ProbeSource::on_timer(std::uint64_t k, SimTime now) {
  Packet p;
  p.flow = flow_;
  p.dir = Direction::Forward;
  p.kind = PacketKind::ProbeRequest;
  p.size = spec_.packet_size;
  p.src_field = Simulation::host_address(src_host_);
  p.original_src = p.src_field;
  p.dst_field = Simulation::host_address(dst_host_);
  p.seq = k;
  p.created_at = now;
  sent_[k] = now;
  fired_[k] = true;
  sim_.send_from_host(src_host_, p);
}

void ProbeSource::on_delivered(const Packet& packet, NodeIndex host, SimTime now) {
  if (packet.flow != flow_) return;
  if (packet.kind == PacketKind::ProbeRequest && host == dst_host_) {
    Packet reply = packet;
    reply.dir = Direction::Reverse;
    reply.kind = PacketKind::ProbeReply;
    reply.hops = 0;
    reply.src_field = Simulation::host_address(dst_host_);
    reply.original_src = reply.src_field;
    reply.dst_field = Simulation::host_address(src_host_);
    reply.created_at = now;
    reply.echo_sent_at = packet.created_at;
    sim_.send_from_host(dst_host_, reply);
  } else if (packet.kind == PacketKind::ProbeReply && host == src_host_) {
    if (packet.seq < answered_.size() && !answered_[packet.seq]) {
      answered_[packet.seq] = true;
      samples_.push_back({packet.echo_sent_at, flow_, now - packet.echo_sent_at});
    }
  }
}

std::vector<SimTime> ProbeSource::unanswered() const {
  std::vector<SimTime> out;
  for (std::size_t i = 0; i < sent_.size(); ++i) {
    if (fired_[i] && !answered_[i]) out.push_back(sent_[i]);
  }
  return out;
}

}  // namespace rdna
