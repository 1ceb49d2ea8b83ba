#include "spillway/metrics/runner.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "spillway/sim/engine.hpp"
#include "spillway/switch/switch_node.hpp"
#include "spillway/transport/host.hpp"
#include "spillway/workload/workload.hpp"

namespace spillway::metrics {

using net::NodeId;
using net::NodeKind;
using net::Packet;
using transport::FlowRole;

namespace {

class Collector : public net::PacketObserver {
public:
    Collector(const net::Topology& topo, transport::FlowTable& flows, RunReport& r)
        : topo_(topo), flows_(flows), r_(r) {}

    void on_delivered(const Packet& p, NodeId, sim::Time) override {
        if (p.is_data() && long_haul(p)) histogram(p.deflect_count);
    }

    void on_dropped(const Packet& p, net::DropReason reason, NodeId at, sim::Time) override {
        ++r_.drops_by_reason[static_cast<std::size_t>(reason)];
        if (!p.is_data()) {
            ++r_.control_drops;
            return;
        }
        if (p.cls == net::TrafficClass::LosslessLocal) ++r_.lossless_drops;
        if (reason == net::DropReason::SpillwayPath || reason == net::DropReason::SpillwayOverflow) {
            ++r_.spillway_port_drops;
        }
        if (p.flow >= flows_.size()) return;
        auto& rec = flows_[p.flow];
        if (!rec.spec.finite()) return;
        const bool dest_dc = topo_.node(at).dc == topo_.node(p.dst).dc;
        ++rec.drops;
        if (dest_dc) ++rec.drops_in_dest_dc;
        if (rec.spec.role == FlowRole::LongHaul) {
            ++r_.long_haul_drops;
            if (dest_dc) ++r_.long_haul_drops_dest_dc;
            const auto& node = topo_.node(at);
            if (node.kind == net::NodeKind::Exit && node.dc == topo_.node(p.src).dc) ++r_.long_haul_drops_source_exits;
            histogram(p.deflect_count);
        }
    }

    void on_transmit(const Packet& p, const net::PortInfo& port, sim::Time) override {
        if (!p.is_data()) return;
        if (p.deflect_count > 0) {
            r_.deflection_overhead_bytes += p.wire_bytes();
            ++r_.deflection_overhead_packet_hops;
        }
        if (port.kind == net::PortKind::Dci && p.retransmission && long_haul(p)) {
            r_.long_haul_overhead_bytes += p.wire_bytes();
        }
    }

private:
    bool long_haul(const Packet& p) const {
        return p.flow < flows_.size() && flows_[p.flow].spec.role == FlowRole::LongHaul;
    }
    void histogram(std::size_t k) {
        if (r_.deflection_histogram.size() <= k) r_.deflection_histogram.resize(k + 1, 0);
        ++r_.deflection_histogram[k];
    }

    const net::Topology& topo_;
    transport::FlowTable& flows_;
    RunReport& r_;
};

class Sampler : public sim::EventHandler {
public:
    Sampler(net::Network& net, sim::Time interval, BufferSeries& out, int dest_dc)
        : net_(net), interval_(interval), out_(out) {
        const auto& topo = net.topology();
        for (NodeId n = 0; n < topo.node_count(); ++n) {
            const auto& info = topo.node(n);
            if (info.kind == NodeKind::Gpu) continue;
            out_.nodes.push_back(n);
            if (info.kind == NodeKind::Spillway && info.dc == dest_dc) spill_cols_.push_back(out_.nodes.size() - 1);
        }
    }

    void start() { net_.engine().schedule(0, this, 0); }

    void handle(const sim::Event& ev) override {
        std::vector<std::uint64_t> row;
        row.reserve(out_.nodes.size());
        for (NodeId n : out_.nodes) row.push_back(net_.node(n).occupancy());
        std::uint64_t total = 0;
        for (auto c : spill_cols_) total += row[c];
        out_.times.push_back(ev.time);
        out_.rows.push_back(std::move(row));
        out_.spillway_total.push_back(total);
        net_.engine().schedule(ev.time + interval_, this, 0);
    }

private:
    net::Network& net_;
    sim::Time interval_;
    BufferSeries& out_;
    std::vector<std::size_t> spill_cols_;
};

std::vector<transport::FlowSpec> load_flows(const ScenarioConfig& cfg, const net::Topology& topo) {
    if (cfg.workload.variant != workload::Variant::Custom) return workload::generate(topo, cfg.workload, cfg.seed);
    std::ifstream in(cfg.workload.flows_file);
    if (!in) throw ConfigError("cannot open workload.flows_file '" + cfg.workload.flows_file + "'");
    nlohmann::json j;
    try {
        in >> j;
        return workload::flows_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("workload.flows_file: " + std::string(e.what()));
    }
}

void check_flows(const std::vector<transport::FlowSpec>& flows, const net::Topology& topo) {
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto& f = flows[i];
        const auto where = "flow " + std::to_string(i);
        if (f.id != i) throw ConfigError(where + ": ids must be dense and ordered");
        if (f.src >= topo.node_count() || f.dst >= topo.node_count()) throw ConfigError(where + ": unknown node");
        if (topo.node(f.src).kind != NodeKind::Gpu || topo.node(f.dst).kind != NodeKind::Gpu) {
            throw ConfigError(where + ": endpoints must be GPUs");
        }
        if (f.src == f.dst) throw ConfigError(where + ": source equals destination");
        const bool cross = topo.node(f.src).dc != topo.node(f.dst).dc;
        if (cross && f.cls != net::TrafficClass::LossyCrossDc) throw ConfigError(where + ": cross-DC flows must be LOSSY_CROSSDC");
        if (!cross && f.cls == net::TrafficClass::LossyCrossDc) throw ConfigError(where + ": LOSSY_CROSSDC flows must cross the DCI");
        if ((f.cls == net::TrafficClass::BackgroundUdp) == f.finite()) {
            throw ConfigError(where + ": exactly the BACKGROUND_UDP flows are unbounded (size 0)");
        }
    }
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& config, const RunOptions& options) {
    validate(config);
    RunReport r;
    r.config = config;
    auto topo = std::make_shared<net::Topology>(net::build_topology(config.effective_topology()));
    r.topology = topo;
    const int dest_dc = 1;

    std::vector<transport::FlowSpec> flows = options.flows ? *options.flows : load_flows(config, *topo);
    check_flows(flows, *topo);
    const auto tparams = config.effective_transport();
    transport::FlowTable table(flows, tparams.mtu);

    sim::Engine engine;
    net::Network network(engine, *topo);
    Collector collector(*topo, table, r);
    network.set_observer(&collector);

    const auto sparams = config.effective_switch();
    std::vector<sw::SwitchNode*> switches;
    std::vector<spill::SpillwayNode*> spillways;
    for (NodeId n = 0; n < topo->node_count(); ++n) {
        const auto& info = topo->node(n);
        if (info.kind == NodeKind::Gpu) {
            network.attach(std::make_unique<transport::HostNode>(network, n, tparams, table));
        } else if (info.kind == NodeKind::Spillway) {
            auto node = std::make_unique<spill::SpillwayNode>(network, n, config.spillway.params, config.seed);
            node->set_trace(options.trace);
            spillways.push_back(node.get());
            network.attach(std::move(node));
        } else {
            auto node = std::make_unique<sw::SwitchNode>(network, n, sparams, config.seed);
            switches.push_back(node.get());
            network.attach(std::move(node));
        }
    }
    for (const auto& f : flows) {
        network.node_as<transport::HostNode>(f.src).add_sender(f.id);
        network.node_as<transport::HostNode>(f.dst).add_receiver(f.id);
    }
    table.on_all_complete([&engine] { engine.stop(); });

    Sampler sampler(network, config.sample_interval, r.buffers, dest_dc);
    if (options.sample_buffers) sampler.start();

    const auto stats = engine.run_until(config.t_end);
    r.events = stats.events_fired;
    r.end_time = engine.now();
    r.all_complete = table.finite_flows() == table.finite_completed();

    r.flows = table.records();
    for (const auto& rec : r.flows) {
        const auto& f = rec.spec;
        const sim::Time ideal = f.finite() ? workload::ideal_fct(f, flows, *topo) : 0;
        r.ideal.push_back(ideal);
        const bool have = rec.complete() && ideal > 0;
        r.slowdown.push_back(have ? static_cast<double>(rec.completion - f.start_time()) / static_cast<double>(ideal) : -1.0);
        if (f.role == FlowRole::LongHaul) {
            r.long_haul_packets_total += rec.packets_total;
            r.long_haul_retransmitted_bytes += rec.bytes_retransmitted;
        }
    }
    for (auto* s : switches) r.switch_peaks.emplace_back(s->id(), s->counters().peak_occupancy);
    for (auto* s : spillways) {
        const auto& c = s->counters();
        r.spillways.packets_in += c.packets_in;
        r.spillways.packets_returning += c.packets_returning;
        r.spillways.packets_reinjected += c.packets_reinjected;
        r.spillways.packets_buffered += s->buffered_packets();
        r.spillways.overflow_drops += c.overflow_drops;
        r.spillways.probes += c.probes;
        r.spillways.forced_probes += c.forced_probes;
        r.spillways.full_bursts += c.full_bursts;
        r.spillways.peak_node_bytes = std::max(r.spillways.peak_node_bytes, c.peak_occupancy);
    }
    const auto& pool = network.packets();
    r.network = network.counters();
    r.conservation = {pool.created(), r.network.delivered, r.network.dropped, pool.live()};
    r.provisioning = spill::provisioning_check(*topo, flows);

    if (options.check_invariants) {
        std::ostringstream bad;
        if (!r.conservation.holds()) bad << "packet conservation violated; ";
        if (r.lossless_drops > 0) bad << r.lossless_drops << " lossless drops; ";
        if (r.control_drops > 0) bad << r.control_drops << " control-packet drops; ";
        for (auto* s : switches) {
            if (s->queued_bytes_total() != s->occupancy()) bad << "occupancy mismatch at switch " << s->id() << "; ";
        }
        const auto& sp = r.spillways;
        if (sp.packets_in != sp.packets_reinjected + sp.packets_buffered + sp.overflow_drops) {
            bad << "spillway conservation violated; ";
        }
        if (!bad.str().empty()) throw InvariantError(bad.str());
    }
    return r;
}

double max_long_haul_slowdown(const RunReport& r) {
    double worst = 0.0;
    for (std::size_t i = 0; i < r.flows.size(); ++i) {
        if (r.flows[i].spec.role != FlowRole::LongHaul) continue;
        if (r.slowdown[i] < 0) return -1.0;  // incomplete
        worst = std::max(worst, r.slowdown[i]);
    }
    return worst;
}

double single_deflection_fraction(const RunReport& r) {
    std::uint64_t deflected = 0;
    for (std::size_t k = 1; k < r.deflection_histogram.size(); ++k) deflected += r.deflection_histogram[k];
    if (deflected == 0 || r.deflection_histogram.size() < 2) return 0.0;
    return static_cast<double>(r.deflection_histogram[1]) / static_cast<double>(deflected);
}

double drain_half_time(const RunReport& r) {
    const auto& s = r.buffers.spillway_total;
    if (s.empty()) return -1.0;
    const auto peak_it = std::max_element(s.begin(), s.end());
    if (*peak_it == 0) return -1.0;
    const auto peak_i = static_cast<std::size_t>(peak_it - s.begin());
    for (std::size_t i = peak_i; i < s.size(); ++i) {
        if (2 * s[i] <= *peak_it) return sim::to_seconds(r.buffers.times[i] - r.buffers.times[peak_i]);
    }
    return -1.0;
}

double peak_spillway_utilization(const RunReport& r) {
    const auto& s = r.buffers.spillway_total;
    const auto cap = r.topology ? r.topology->aggregate_spillway_capacity(1) : 0;
    if (s.empty() || cap == 0) return 0.0;
    return static_cast<double>(*std::max_element(s.begin(), s.end())) / static_cast<double>(cap);
}

nlohmann::json figure_analog(const RunReport& r) {
    using nlohmann::json;
    const auto& topo = *r.topology;
    json out;

    // Long-haul aggregates.
    double fct_sum = 0.0;
    int lh = 0;
    std::int64_t first_lh = -1;
    for (std::size_t i = 0; i < r.flows.size(); ++i) {
        if (r.flows[i].spec.role != FlowRole::LongHaul) continue;
        if (first_lh < 0) first_lh = static_cast<std::int64_t>(i);
        if (r.flows[i].complete()) {
            fct_sum += r.flows[i].fct_seconds();
            ++lh;
        }
    }
    out["design_space"] = {{"mean_long_haul_fct_ms", lh ? fct_sum / lh * 1e3 : -1.0},
                           {"long_haul_overhead_bytes", r.long_haul_overhead_bytes},
                           {"deflection_overhead_bytes", r.deflection_overhead_bytes},
                           {"deflection_overhead_packet_hops", r.deflection_overhead_packet_hops}};

    json motivation = json::object();
    if (first_lh >= 0) {
        const auto& f = r.flows[first_lh];
        const NodeId leaf = topo.leaf_of(f.spec.dst);
        std::uint64_t leaf_peak = 0;
        for (const auto& [n, peak] : r.switch_peaks)
            if (n == leaf) leaf_peak = peak;
        motivation = {{"flow", first_lh},
                      {"loss_fraction", f.packets_total ? static_cast<double>(f.drops) / f.packets_total : 0.0},
                      {"fct_ms", f.complete() ? f.fct_seconds() * 1e3 : -1.0},
                      {"ideal_ms", sim::to_millis(r.ideal[first_lh])},
                      {"slowdown", r.slowdown[first_lh]},
                      {"dest_leaf_peak_mb", static_cast<double>(leaf_peak) / 1e6}};
    }
    out["motivation"] = motivation;

    std::uint64_t deflected = 0;
    for (std::size_t k = 1; k < r.deflection_histogram.size(); ++k) deflected += r.deflection_histogram[k];
    json fractions = json::array();
    for (std::size_t k = 1; k < r.deflection_histogram.size(); ++k) {
        fractions.push_back(deflected ? static_cast<double>(r.deflection_histogram[k]) / deflected : 0.0);
    }
    out["selection"] = {{"deflected_packets", deflected},
                        {"fraction_by_deflections_from_1", fractions},
                        {"single_deflection_fraction", single_deflection_fraction(r)},
                        {"multi_deflection_fraction", deflected ? 1.0 - single_deflection_fraction(r) : 0.0},
                        {"max_deflections", r.deflection_histogram.empty() ? 0 : r.deflection_histogram.size() - 1},
                        {"spillway_port_drops", r.spillway_port_drops}};

    out["buffer_utilization"] = {{"peak_normalized_spillway_utilization", peak_spillway_utilization(r)},
                                 {"drain_half_time_ms", drain_half_time(r) < 0 ? -1.0 : drain_half_time(r) * 1e3},
                                 {"aggregate_capacity_bytes", topo.aggregate_spillway_capacity(1)}};

    std::uint64_t spine_peak = 0;
    for (const auto& [n, peak] : r.switch_peaks) {
        if (topo.node(n).kind == NodeKind::Spine && topo.node(n).dc == 1) spine_peak = std::max(spine_peak, peak);
    }
    out["stress"] = {{"max_long_haul_slowdown", max_long_haul_slowdown(r)},
                     {"dest_spine_peak_mb", static_cast<double>(spine_peak) / 1e6},
                     {"long_haul_drops_dest_dc", r.long_haul_drops_dest_dc}};

    json cnp = json::object();
    if (first_lh >= 0) {
        const auto& f = r.flows[first_lh];
        const double bin_s = 1e-3;
        // Rate while actively sending; the first and last active bins are partial.
        std::vector<double> rates;
        for (std::uint64_t bytes : f.tx_bin_bytes) {
            if (bytes > 0) rates.push_back(static_cast<double>(bytes) * 8.0 / bin_s / 1e9);
        }
        if (rates.size() > 2) rates = std::vector<double>(rates.begin() + 1, rates.end() - 1);
        double median = -1.0;
        if (!rates.empty()) {
            std::sort(rates.begin(), rates.end());
            median = rates[rates.size() / 2];
        }
        cnp = {{"flow", first_lh},
               {"median_tx_gbps", median},
               {"fct_ms", f.complete() ? f.fct_seconds() * 1e3 : -1.0},
               {"ideal_ms", sim::to_millis(r.ideal[first_lh])},
               {"cnps_received", f.cnps_received},
               {"long_haul_drops_source_dc", r.long_haul_drops - r.long_haul_drops_dest_dc},
               {"long_haul_drops_source_exits", r.long_haul_drops_source_exits}};
    }
    out["fast_cnp"] = cnp;
    return out;
}

}  // namespace spillway::metrics
