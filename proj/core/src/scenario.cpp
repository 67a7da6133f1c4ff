// SPDX-License-Identifier: Apache-2.0
#include "rdna/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <map>
#include <set>
#include <sstream>

#include "rdna/error.hpp"

namespace rdna {

namespace {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_uint(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

class Parser {
 public:
  ParseResult parse(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = text.find('\n', start);
      std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
      ++line_no;
      parse_line(line_no, line);
      if (end == std::string_view::npos) break;
      start = end + 1;
    }
    finish();
    ParseResult result;
    result.errors = std::move(errors_);
    if (result.errors.empty()) result.scenario = std::move(scenario_);
    return result;
  }

 private:
  struct Line {
    std::size_t no;
    std::vector<std::string> positional;
    std::map<std::string, std::string> options;
  };

  void error(std::size_t line, std::string message) { errors_.push_back({line, std::move(message)}); }

  void parse_line(std::size_t no, std::string_view raw) {
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::istringstream in{std::string(raw)};
    std::string keyword;
    if (!(in >> keyword)) return;
    Line line{no, {}, {}};
    for (std::string tok; in >> tok;) {
      if (const auto eq = tok.find('='); eq != std::string::npos) {
        auto key = tok.substr(0, eq);
        if (!line.options.emplace(key, tok.substr(eq + 1)).second) error(no, "duplicate option " + key);
      } else {
        line.positional.push_back(tok);
      }
    }
    if (keyword == "core" || keyword == "edge" || keyword == "host") {
      parse_node(keyword, line);
    } else if (keyword == "link") {
      parse_link(line);
    } else if (keyword == "controller") {
      parse_controller(line);
    } else if (keyword == "flow") {
      parse_flow(line);
    } else if (keyword == "event") {
      parse_event(line);
    } else if (keyword == "run") {
      parse_run(line);
    } else {
      error(no, "unknown declaration '" + keyword + "'");
    }
  }

  bool expect_positional(const Line& line, std::size_t n, std::string_view what) {
    if (line.positional.size() == n) return true;
    error(line.no, std::string(what) + " expects " + std::to_string(n) + " positional field(s)");
    return false;
  }

  bool check_options(const Line& line, std::initializer_list<std::string_view> allowed) {
    bool ok = true;
    for (const auto& [key, value] : line.options) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        error(line.no, "unknown option " + key);
        ok = false;
      }
    }
    return ok;
  }

  std::optional<double> number(const Line& line, const std::string& key, bool required,
                               std::optional<double> fallback = std::nullopt) {
    const auto it = line.options.find(key);
    if (it == line.options.end()) {
      if (required) error(line.no, "missing option " + key);
      return fallback;
    }
    auto v = to_double(it->second);
    if (!v) error(line.no, "option " + key + " is not a number: '" + it->second + "'");
    return v;
  }

  std::optional<std::uint64_t> integer(const Line& line, const std::string& key, bool required) {
    const auto it = line.options.find(key);
    if (it == line.options.end()) {
      if (required) error(line.no, "missing option " + key);
      return std::nullopt;
    }
    auto v = to_uint(it->second);
    if (!v) error(line.no, "option " + key + " is not a non-negative integer: '" + it->second + "'");
    return v;
  }

  std::optional<std::string> text(const Line& line, const std::string& key, bool required) {
    const auto it = line.options.find(key);
    if (it == line.options.end()) {
      if (required) error(line.no, "missing option " + key);
      return std::nullopt;
    }
    return it->second;
  }

  void parse_node(const std::string& kind, const Line& line) {
    if (!expect_positional(line, 1, kind)) return;
    const auto& name = line.positional[0];
    if (scenario_.topology.find(name)) {
      error(line.no, "duplicate node name " + name);
      return;
    }
    if (kind == "core") {
      check_options(line, {"modulus"});
      const auto m = integer(line, "modulus", true);
      if (!m) return;
      scenario_.topology.add_core(name, *m);
    } else {
      check_options(line, {});
      if (kind == "edge") {
        scenario_.topology.add_edge(name);
      } else {
        scenario_.topology.add_host(name);
      }
    }
  }

  std::optional<LinkEnd> endpoint(const Line& line, const std::string& token) {
    const auto colon = token.rfind(':');
    if (colon == std::string::npos) {
      error(line.no, "link endpoint '" + token + "' must be <node>:<port>");
      return std::nullopt;
    }
    const auto name = token.substr(0, colon);
    const auto node = scenario_.topology.find(name);
    if (!node) {
      error(line.no, "unknown node " + name);
      return std::nullopt;
    }
    const auto port = to_uint(std::string_view(token).substr(colon + 1));
    if (!port || *port > std::numeric_limits<PortIndex>::max()) {
      error(line.no, "bad port in '" + token + "'");
      return std::nullopt;
    }
    return LinkEnd{*node, static_cast<PortIndex>(*port)};
  }

  void parse_link(const Line& line) {
    if (!expect_positional(line, 2, "link")) return;
    check_options(line, {"capacity", "delay", "buffer"});
    const auto a = endpoint(line, line.positional[0]);
    const auto b = endpoint(line, line.positional[1]);
    const auto cap = number(line, "capacity", true);
    const auto delay = number(line, "delay", true);
    const auto buffer = integer(line, "buffer", true);
    if (!a || !b || !cap || !delay || !buffer) return;
    if (*buffer > std::numeric_limits<std::uint32_t>::max()) {
      error(line.no, "buffer too large");
      return;
    }
    scenario_.topology.add_link(*a, *b, *cap, *delay, static_cast<std::uint32_t>(*buffer));
    link_lines_.push_back(line.no);
  }

  void parse_controller(const Line& line) {
    check_options(line, {"poll", "theta_e", "theta_m", "k", "alpha", "t_rule", "t_drain", "blackhole", "auto_balance"});
    auto& c = scenario_.controller;
    c.poll_s = number(line, "poll", false, c.poll_s).value_or(c.poll_s);
    c.theta_e = number(line, "theta_e", false, c.theta_e).value_or(c.theta_e);
    c.theta_m = number(line, "theta_m", false, c.theta_m).value_or(c.theta_m);
    if (auto k = integer(line, "k", false)) c.k = static_cast<std::uint32_t>(*k);
    c.alpha = number(line, "alpha", false, c.alpha).value_or(c.alpha);
    c.t_rule_s = number(line, "t_rule", false, c.t_rule_s).value_or(c.t_rule_s);
    c.t_drain_s = number(line, "t_drain", false, c.t_drain_s).value_or(c.t_drain_s);
    c.blackhole_s = number(line, "blackhole", false, c.blackhole_s).value_or(c.blackhole_s);
    if (auto ab = text(line, "auto_balance", false)) {
      if (*ab == "on") {
        c.auto_balance = true;
      } else if (*ab == "off") {
        c.auto_balance = false;
      } else {
        error(line.no, "auto_balance must be on or off");
      }
    }
    if (!(c.poll_s > 0)) error(line.no, "poll must be > 0");
    if (!(c.alpha > 0 && c.alpha <= 1)) error(line.no, "alpha must be in (0, 1]");
    if (c.k < 1) error(line.no, "k must be >= 1");
    if (!(c.theta_m >= 0 && c.theta_m <= c.theta_e)) error(line.no, "need 0 <= theta_m <= theta_e");
    if (!(c.t_rule_s >= 0 && c.t_drain_s > 0 && c.blackhole_s >= 0)) {
      error(line.no, "need t_rule >= 0, t_drain > 0, blackhole >= 0");
    }
  }

  void parse_flow(const Line& line) {
    if (!expect_positional(line, 2, "flow")) return;
    FlowSpec spec;
    spec.id = line.positional[0];
    const auto& kind = line.positional[1];
    if (kind == "cbr") {
      spec.kind = FlowKind::Cbr;
      check_options(line, {"src", "dst", "rate_pps", "rate_bps", "size", "start", "stop"});
    } else if (kind == "probe") {
      spec.kind = FlowKind::Probe;
      check_options(line, {"src", "dst", "period", "size", "start", "stop", "jitter"});
    } else {
      error(line.no, "flow kind must be cbr or probe");
      return;
    }
    spec.src = text(line, "src", true).value_or("");
    spec.dst = text(line, "dst", true).value_or("");
    const auto size = integer(line, "size", spec.kind == FlowKind::Cbr);
    spec.packet_size = size ? static_cast<std::uint32_t>(*size) : kDefaultProbeSize;
    spec.start_s = number(line, "start", true).value_or(0);
    spec.stop_s = number(line, "stop", true).value_or(0);
    if (spec.kind == FlowKind::Cbr) {
      const bool has_pps = line.options.contains("rate_pps");
      const bool has_bps = line.options.contains("rate_bps");
      if (has_pps == has_bps) {
        error(line.no, "cbr flow needs exactly one of rate_pps or rate_bps");
      } else if (has_pps) {
        spec.rate_pps = number(line, "rate_pps", true).value_or(0);
      } else if (spec.packet_size > 0) {
        spec.rate_pps = pps_from_bps(number(line, "rate_bps", true).value_or(0), spec.packet_size);
      }
      if (!(spec.rate_pps > 0)) error(line.no, "rate must be > 0");
    } else {
      spec.period_s = number(line, "period", true).value_or(0);
      spec.jitter_s = number(line, "jitter", false, 0.0).value_or(0);
      if (!(spec.period_s > 0)) error(line.no, "period must be > 0");
      if (!(spec.jitter_s >= 0)) error(line.no, "jitter must be >= 0");
    }
    if (spec.packet_size == 0) error(line.no, "size must be > 0");
    if (!(spec.start_s >= 0 && spec.start_s < spec.stop_s)) error(line.no, "need 0 <= start < stop");
    for (const auto& f : scenario_.flows) {
      if (f.id == spec.id) error(line.no, "duplicate flow id " + spec.id);
    }
    flow_lines_.push_back(line.no);
    scenario_.flows.push_back(std::move(spec));
  }

  void parse_event(const Line& line) {
    if (!expect_positional(line, 1, "event")) return;
    const auto& kind = line.positional[0];
    if (kind == "register") {
      check_options(line, {"flow", "path"});
      Registration r;
      r.flow = text(line, "flow", true).value_or("");
      r.cores = split(text(line, "path", true).value_or(""), ',');
      registrations_lines_.push_back(line.no);
      scenario_.registrations.push_back(std::move(r));
    } else if (kind == "migrate") {
      check_options(line, {"flow", "at", "path"});
      ScriptedMigration m;
      m.flow = text(line, "flow", true).value_or("");
      m.at_s = number(line, "at", true).value_or(0);
      if (auto p = text(line, "path", false)) m.cores = split(*p, ',');
      if (!(m.at_s >= 0)) error(line.no, "at must be >= 0");
      migration_lines_.push_back(line.no);
      scenario_.migrations.push_back(std::move(m));
    } else {
      error(line.no, "event kind must be register or migrate");
    }
  }

  void parse_run(const Line& line) {
    check_options(line, {"duration", "seed", "window"});
    auto& r = scenario_.run;
    r.duration_s = number(line, "duration", false, r.duration_s).value_or(r.duration_s);
    if (auto seed = integer(line, "seed", false)) r.seed = *seed;
    r.window_s = number(line, "window", false, r.window_s).value_or(r.window_s);
    if (!(r.duration_s > 0)) error(line.no, "duration must be > 0");
    if (!(r.window_s > 0)) error(line.no, "window must be > 0");
  }

  const FlowSpec* find_flow(const std::string& id) const {
    for (const auto& f : scenario_.flows) {
      if (f.id == id) return &f;
    }
    return nullptr;
  }

  void check_path(std::size_t line, const FlowSpec& f, const std::vector<std::string>& cores) {
    const auto& t = scenario_.topology;
    try {
      make_path(t, *t.find(f.src), *t.find(f.dst), cores);
    } catch (const Error& e) {
      error(line, "flow " + f.id + ": " + e.what());
    }
  }

  void finish() {
    auto& t = scenario_.topology;
    if (t.nodes().empty()) {
      error(0, "no topology");
      return;
    }
    const auto report = validate_topology(t);
    for (const auto& v : report.violations) error(v.link ? link_lines_[*v.link] : 0, v.message);

    bool hosts_ok = true;
    for (std::size_t i = 0; i < scenario_.flows.size(); ++i) {
      const auto& f = scenario_.flows[i];
      for (const auto& name : {f.src, f.dst}) {
        const auto n = t.find(name);
        if (!n) {
          error(flow_lines_[i], "unknown node " + name);
          hosts_ok = false;
        } else if (t.node(*n).kind != NodeKind::Host) {
          error(flow_lines_[i], name + " is not a host");
          hosts_ok = false;
        }
      }
    }
    const bool paths_checkable = report.ok() && hosts_ok;

    std::set<std::string> registered;
    for (std::size_t i = 0; i < scenario_.registrations.size(); ++i) {
      const auto& r = scenario_.registrations[i];
      const auto* f = find_flow(r.flow);
      if (!f) {
        error(registrations_lines_[i], "unknown flow " + r.flow);
        continue;
      }
      if (!registered.insert(r.flow).second) error(registrations_lines_[i], "flow " + r.flow + " registered twice");
      if (paths_checkable) check_path(registrations_lines_[i], *f, r.cores);
    }
    for (std::size_t i = 0; i < scenario_.migrations.size(); ++i) {
      const auto& m = scenario_.migrations[i];
      const auto* f = find_flow(m.flow);
      if (!f) {
        error(migration_lines_[i], "unknown flow " + m.flow);
        continue;
      }
      if (!registered.contains(m.flow)) error(migration_lines_[i], "flow " + m.flow + " is migrated but never registered");
      if (paths_checkable && m.cores) check_path(migration_lines_[i], *f, *m.cores);
    }
    std::stable_sort(errors_.begin(), errors_.end(),
                     [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
  }

  Scenario scenario_;
  std::vector<Diagnostic> errors_;
  std::vector<std::size_t> link_lines_;
  std::vector<std::size_t> flow_lines_;
  std::vector<std::size_t> registrations_lines_;
  std::vector<std::size_t> migration_lines_;
};

}  // namespace

ParseResult parse_scenario(std::string_view text) { return Parser{}.parse(text); }

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream out;
  const auto& t = s.topology;
  for (const auto& n : t.nodes()) {
    out << to_string(n.kind) << ' ' << n.name;
    if (n.kind == NodeKind::CoreSwitch) out << " modulus=" << n.modulus;
    out << '\n';
  }
  for (const auto& l : t.links()) {
    out << "link " << t.node(l.a.node).name << ':' << l.a.port << ' ' << t.node(l.b.node).name << ':' << l.b.port
        << " capacity=" << format_number(l.capacity_bps) << " delay=" << format_number(l.propagation_delay_s)
        << " buffer=" << l.buffer_packets << '\n';
  }
  const auto& c = s.controller;
  out << "controller poll=" << format_number(c.poll_s) << " theta_e=" << format_number(c.theta_e)
      << " theta_m=" << format_number(c.theta_m) << " k=" << c.k << " alpha=" << format_number(c.alpha)
      << " t_rule=" << format_number(c.t_rule_s) << " t_drain=" << format_number(c.t_drain_s)
      << " blackhole=" << format_number(c.blackhole_s) << " auto_balance=" << (c.auto_balance ? "on" : "off")
      << '\n';
  for (const auto& f : s.flows) {
    out << "flow " << f.id;
    if (f.kind == FlowKind::Cbr) {
      out << " cbr src=" << f.src << " dst=" << f.dst << " rate_pps=" << format_number(f.rate_pps);
    } else {
      out << " probe src=" << f.src << " dst=" << f.dst << " period=" << format_number(f.period_s);
    }
    out << " size=" << f.packet_size << " start=" << format_number(f.start_s) << " stop=" << format_number(f.stop_s);
    if (f.kind == FlowKind::Probe && f.jitter_s > 0) out << " jitter=" << format_number(f.jitter_s);
    out << '\n';
  }
  for (const auto& r : s.registrations) out << "event register flow=" << r.flow << " path=" << join(r.cores, ',') << '\n';
  for (const auto& m : s.migrations) {
    out << "event migrate flow=" << m.flow << " at=" << format_number(m.at_s);
    if (m.cores) out << " path=" << join(*m.cores, ',');
    out << '\n';
  }
  out << "run duration=" << format_number(s.run.duration_s) << " seed=" << s.run.seed
      << " window=" << format_number(s.run.window_s) << '\n';
  return out.str();
}

bool ExperimentResult::conserved() const noexcept {
  if (counters.generated != counters.delivered + counters.total_dropped() + in_flight) return false;
  std::uint64_t generated = 0;
  std::uint64_t accounted = 0;
  for (const auto& f : flow_counters) {
    generated += f.generated;
    accounted += f.delivered + f.dropped[0] + f.dropped[1] + f.dropped[2];
  }
  return generated == counters.generated && generated == accounted + in_flight;
}

std::optional<FlowId> ExperimentResult::flow_id(std::string_view name) const {
  for (std::size_t i = 0; i < flow_names.size(); ++i) {
    if (flow_names[i] == name) return static_cast<FlowId>(i);
  }
  return std::nullopt;
}

namespace {

class Runner : public DataplaneObserver, public TimerClient {
 public:
  Runner(const Scenario& s, SimulationConfig config)
      : scenario_(s),
        sim_(s.topology, config),
        controller_(sim_, s.controller),
        width_(SimTime::from_seconds(s.run.window_s)),
        duration_(SimTime::from_seconds(s.run.duration_s)),
        throughput_(width_, static_cast<std::size_t>((duration_.ps() + width_.ps() - 1) / width_.ps()),
                    s.flows.size()) {
    sim_.set_observer(this);
  }

  ExperimentResult run() {
    const auto& t = sim_.topology();
    const auto& flows = scenario_.flows;
    std::map<std::string, FlowId> ids;
    for (std::size_t i = 0; i < flows.size(); ++i) ids[flows[i].id] = static_cast<FlowId>(i);

    for (const auto& r : scenario_.registrations) {
      const FlowId id = ids.at(r.flow);
      const auto& f = flows[id];
      const Path path = make_path(t, *t.find(f.src), *t.find(f.dst), r.cores);
      controller_.register_flow(id, {f.src, f.dst, f.kind == FlowKind::Cbr ? "udp" : "icmp", f.id}, path,
                                f.kind == FlowKind::Probe);
    }
    probes_.assign(flows.size(), nullptr);
    for (std::size_t i = 0; i < flows.size(); ++i) {
      const auto& f = flows[i];
      const auto id = static_cast<FlowId>(i);
      const NodeIndex src = *t.find(f.src);
      const NodeIndex dst = *t.find(f.dst);
      if (f.kind == FlowKind::Cbr) {
        cbr_.push_back(std::make_unique<CbrSource>(sim_, id, src, dst, f));
        cbr_.back()->start();
      } else {
        const std::uint64_t seed = scenario_.run.seed ^ (0xa24baed4963ee407ULL * (id + 1));
        probe_owned_.push_back(std::make_unique<ProbeSource>(sim_, id, src, dst, f, seed));
        probes_[i] = probe_owned_.back().get();
        probes_[i]->start();
      }
    }
    for (std::size_t i = 0; i < scenario_.migrations.size(); ++i) {
      sim_.schedule_timer(SimTime::from_seconds(scenario_.migrations[i].at_s), this, i, EventKind::Control);
    }
    controller_.start(duration_);

    sim_.run_until(duration_);

    ExperimentResult result;
    result.topology = t;
    for (const auto& f : flows) result.flow_names.push_back(f.id);
    for (std::size_t i = 0; i < flows.size(); ++i) {
      if (!probes_[i]) continue;
      for (const auto& sample : probes_[i]->samples()) result.rtt.push_back(sample);
      for (const auto& sent : probes_[i]->unanswered()) {
        loss_.add(interval(sent), static_cast<FlowId>(i), LossCause::ProbeLost);
      }
    }
    std::sort(result.rtt.begin(), result.rtt.end(), [](const RttSample& a, const RttSample& b) {
      return a.sent != b.sent ? a.sent < b.sent : a.flow < b.flow;
    });
    result.throughput = throughput_;
    result.loss = loss_;
    const auto& actions = controller_.migrations();
    for (std::size_t i = 0; i < actions.size(); ++i) {
      result.migrations.push_back({actions[i], window_drops_.size() > i ? window_drops_[i] : 0,
                                   window_unmatched_.size() > i ? window_unmatched_[i] : 0});
    }
    result.polls = controller_.polls();
    result.rule_log = sim_.rule_log();
    result.counters = sim_.counters();
    for (FlowId id = 0; id < flows.size(); ++id) result.flow_counters.push_back(sim_.flow_counters(id));
    result.in_flight = sim_.in_flight();
    return result;
  }

  void on_delivered(const Packet& packet, NodeIndex host, SimTime now) override {
    if (packet.dir == Direction::Forward) throughput_.add(now, packet.flow, std::uint64_t{packet.size} * 8);
    if (packet.flow < probes_.size() && probes_[packet.flow]) probes_[packet.flow]->on_delivered(packet, host, now);
  }

  void on_dropped(const Packet& packet, NodeIndex, DropCause cause, SimTime now) override {
    loss_.add(interval(now), packet.flow, loss_cause(cause));
    const auto& actions = controller_.migrations();
    window_drops_.resize(actions.size(), 0);
    window_unmatched_.resize(actions.size(), 0);
    for (std::size_t i = 0; i < actions.size(); ++i) {
      const auto& a = actions[i];
      if (a.flow != packet.flow || now < a.decided_at || now > a.drain_until) continue;
      ++window_drops_[i];
      if (cause == DropCause::Unmatched) ++window_unmatched_[i];
    }
  }

  void on_timer(std::uint64_t index, SimTime now) override {
    const auto& m = scenario_.migrations[index];
    const auto& t = sim_.topology();
    FlowId id = 0;
    while (scenario_.flows[id].id != m.flow) ++id;
    std::optional<Path> target;
    if (m.cores) {
      const auto& f = scenario_.flows[id];
      target = make_path(t, *t.find(f.src), *t.find(f.dst), *m.cores);
    }
    controller_.migrate(id, target, now);
  }

 private:
  std::size_t interval(SimTime at) const {
    const auto i = static_cast<std::size_t>(at.ps() / width_.ps());
    const auto last = throughput_.window_count();
    return last > 0 && i >= last ? last - 1 : i;  // events at exactly t_end
  }

  const Scenario& scenario_;
  Simulation sim_;
  Controller controller_;
  SimTime width_;
  SimTime duration_;
  ThroughputWindows throughput_;
  LossCounters loss_;
  std::vector<std::unique_ptr<CbrSource>> cbr_;
  std::vector<std::unique_ptr<ProbeSource>> probe_owned_;
  std::vector<ProbeSource*> probes_;
  std::vector<std::uint64_t> window_drops_;
  std::vector<std::uint64_t> window_unmatched_;
};

}  // namespace

ExperimentResult run_scenario(const Scenario& scenario, SimulationConfig config) {
  return Runner(scenario, config).run();
}

std::string throughput_csv(const ExperimentResult& r) {
  std::string out = "window_start_s,flow,bits_per_s\n";
  const auto& tw = r.throughput;
  for (std::size_t w = 0; w < tw.window_count(); ++w) {
    const auto start = format_seconds(SimTime::from_ps(tw.width().ps() * static_cast<std::int64_t>(w)));
    for (FlowId f = 0; f < tw.flow_count(); ++f) {
      out += start + ',' + r.flow_names[f] + ',' + fixed9(tw.bits_per_second(w, f)) + '\n';
    }
  }
  return out;
}

std::string rtt_csv(const ExperimentResult& r) {
  std::string out = "send_time_s,flow,rtt_s\n";
  for (const auto& s : r.rtt) {
    out += format_seconds(s.sent) + ',' + r.flow_names[s.flow] + ',' + format_seconds(s.rtt) + '\n';
  }
  return out;
}

std::string loss_csv(const ExperimentResult& r) {
  std::string out = "interval_start_s,flow,cause,count\n";
  const auto width = r.throughput.width();
  for (const auto& row : r.loss.rows()) {
    out += format_seconds(SimTime::from_ps(width.ps() * static_cast<std::int64_t>(row.interval))) + ',' +
           r.flow_names[row.flow] + ',' + std::string(to_string(row.cause)) + ',' + std::to_string(row.count) + '\n';
  }
  return out;
}

std::string migrations_csv(const ExperimentResult& r) {
  std::string out = "decided_s,flow,old_route,new_route,old_path,new_path,dropped_during_window\n";
  for (const auto& m : r.migrations) {
    const auto& a = m.action;
    out += format_seconds(a.decided_at) + ',' + r.flow_names[a.flow] + ',' + std::to_string(a.old_route.value()) +
           ',' + std::to_string(a.new_route.value()) + ',' + path_label(r.topology, a.old_path) + ',' +
           path_label(r.topology, a.new_path) + ',' + std::to_string(m.dropped_during_window) + '\n';
  }
  return out;
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto write = [&](const char* name, const std::string& body) {
    std::ofstream f(out_dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
    f << body;
  };
  write("throughput.csv", throughput_csv(result));
  write("rtt.csv", rtt_csv(result));
  write("loss.csv", loss_csv(result));
  write("migrations.csv", migrations_csv(result));
}

ExperimentResult run_experiment(const Scenario& scenario, const std::filesystem::path& out_dir) {
  auto result = run_scenario(scenario);
  write_outputs(result, out_dir);
  return result;
}

namespace {

Scenario fig_base() {
  Scenario s;
  s.topology = fig_topology();
  s.run = {60, 1, 1};
  return s;
}

}  // namespace

Scenario builtin_fig_b_migration(double rate_mbps, double blackhole_s) {
  Scenario s = fig_base();
  s.controller.blackhole_s = blackhole_s;
  FlowSpec f;
  f.id = "flow1";
  f.kind = FlowKind::Cbr;
  f.rate_pps = pps_from_bps(rate_mbps * 1e6, kFigPacketSize);
  f.packet_size = kFigPacketSize;
  f.start_s = 0;
  f.stop_s = 60;
  f.src = "VMS1";
  f.dst = "VMD2";
  s.flows.push_back(f);
  s.registrations.push_back({"flow1", {"S11", "S19", "S17"}});
  s.migrations.push_back({"flow1", 50, std::vector<std::string>{"S11", "S13", "S17"}});
  return s;
}

Scenario builtin_fig_cd_isolation() {
  Scenario s = fig_base();
  FlowSpec elephant;
  elephant.id = "flow1";
  elephant.kind = FlowKind::Cbr;
  elephant.rate_pps = kFigElephantPps;
  elephant.packet_size = kFigPacketSize;
  elephant.start_s = 0;
  elephant.stop_s = 60;
  elephant.src = "VMS1";
  elephant.dst = "VMD2";
  FlowSpec probe;
  probe.id = "flow2";
  probe.kind = FlowKind::Probe;
  probe.period_s = 1;
  probe.packet_size = kDefaultProbeSize;
  probe.start_s = 0;
  probe.stop_s = 60;
  probe.src = "VMS2";
  probe.dst = "VMD1";
  probe.jitter_s = 1e-3;
  s.flows = {elephant, probe};
  s.registrations.push_back({"flow1", {"S11", "S19", "S17"}});
  s.registrations.push_back({"flow2", {"S11", "S19", "S17"}});
  s.migrations.push_back({"flow1", 30, std::vector<std::string>{"S11", "S13", "S17"}});
  return s;
}

std::optional<Scenario> builtin_scenario(std::string_view name, double rate_mbps) {
  if (name == "fig_b_migration") return builtin_fig_b_migration(rate_mbps);
  if (name == "fig_cd_isolation") return builtin_fig_cd_isolation();
  return std::nullopt;
}

}  // namespace rdna
