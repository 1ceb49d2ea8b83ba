#include "spillway/metrics/outputs.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "spillway/workload/workload.hpp"

namespace spillway::metrics {

using nlohmann::json;

namespace {

std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    return out;
}

}  // namespace

void write_flows_csv(std::ostream& os, const RunReport& r) {
    os << "flow_id,role,class,src,dst,size_bytes,start_ns,completion_ns,fct_ms,ideal_ms,slowdown,packets_sent,"
          "packets_retransmitted,bytes_retransmitted,rto_expirations,drops,drops_dest_dc,cnps_received\n";
    for (std::size_t i = 0; i < r.flows.size(); ++i) {
        const auto& f = r.flows[i];
        const auto& s = f.spec;
        os << s.id << ',' << transport::to_string(s.role) << ',' << net::to_string(s.cls) << ',' << s.src << ','
           << s.dst << ',' << s.size << ',' << s.start_time() << ',' << f.completion << ','
           << (f.complete() ? fmt(f.fct_seconds() * 1e3) : "") << ',' << fmt(sim::to_millis(r.ideal[i])) << ','
           << (r.slowdown[i] >= 0 ? fmt(r.slowdown[i]) : "") << ',' << f.packets_sent << ','
           << f.packets_retransmitted << ',' << f.bytes_retransmitted << ',' << f.rto_expirations << ',' << f.drops
           << ',' << f.drops_in_dest_dc << ',' << f.cnps_received << '\n';
    }
}

void write_deflections_csv(std::ostream& os, const RunReport& r) {
    os << "deflections,packets,fraction_of_long_haul,fraction_of_deflected\n";
    std::uint64_t total = 0, deflected = 0;
    for (std::size_t k = 0; k < r.deflection_histogram.size(); ++k) {
        total += r.deflection_histogram[k];
        if (k > 0) deflected += r.deflection_histogram[k];
    }
    for (std::size_t k = 0; k < r.deflection_histogram.size(); ++k) {
        const auto n = r.deflection_histogram[k];
        os << k << ',' << n << ',' << fmt(total ? static_cast<double>(n) / total : 0.0) << ','
           << (k == 0 ? "" : fmt(deflected ? static_cast<double>(n) / deflected : 0.0)) << '\n';
    }
}

void write_buffers_csv(std::ostream& os, const RunReport& r) {
    const auto& topo = *r.topology;
    const double switch_cap = static_cast<double>(topo.config().switch_buffer_bytes);
    const double spill_cap = static_cast<double>(topo.aggregate_spillway_capacity(1));
    os << "time_us,node_id,kind,dc,index,bytes,normalized\n";
    const auto& b = r.buffers;
    for (std::size_t t = 0; t < b.times.size(); ++t) {
        const std::string ts = fmt(sim::to_micros(b.times[t]), 3);
        for (std::size_t i = 0; i < b.nodes.size(); ++i) {
            const auto& info = topo.node(b.nodes[i]);
            const auto bytes = b.rows[t][i];
            const double norm = info.kind == net::NodeKind::Spillway
                                    ? (spill_cap > 0 ? bytes / spill_cap : 0.0)
                                    : bytes / switch_cap;
            os << ts << ',' << b.nodes[i] << ',' << net::to_string(info.kind) << ',' << info.dc << ',' << info.index
               << ',' << bytes << ',' << fmt(norm, 9) << '\n';
        }
    }
}

void write_cnp_bins_csv(std::ostream& os, const RunReport& r) {
    os << "flow_id,bin_ms,tx_gbps,rx_gbps,cnps\n";
    for (const auto& f : r.flows) {
        if (f.spec.cls != net::TrafficClass::LossyCrossDc) continue;
        const std::size_t bins = std::max({f.tx_bin_bytes.size(), f.rx_bin_bytes.size(), f.cnp_bin.size()});
        for (std::size_t b = 0; b < bins; ++b) {
            const double tx = b < f.tx_bin_bytes.size() ? f.tx_bin_bytes[b] * 8.0 / 1e-3 / 1e9 : 0.0;
            const double rx = b < f.rx_bin_bytes.size() ? f.rx_bin_bytes[b] * 8.0 / 1e-3 / 1e9 : 0.0;
            const auto c = b < f.cnp_bin.size() ? f.cnp_bin[b] : 0u;
            os << f.spec.id << ',' << b << ',' << fmt(tx, 3) << ',' << fmt(rx, 3) << ',' << c << '\n';
        }
    }
}

json summary_json(const RunReport& r) {
    json j;
    j["scenario"] = r.config.name;
    j["seed"] = r.config.seed;
    j["config"] = config_to_json(r.config);
    const auto& topo = *r.topology;
    j["topology"] = {{"nodes", topo.node_count()},
                     {"links", topo.port_count() / 2},
                     {"spillways_per_dc", topo.spillways_of_dc(1).size()},
                     {"aggregate_spillway_capacity_bytes", topo.aggregate_spillway_capacity(1)}};

    std::size_t finite = 0, complete = 0, lh = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < r.flows.size(); ++i) {
        if (!r.flows[i].spec.finite()) continue;
        ++finite;
        if (r.flows[i].complete()) ++complete;
        if (r.flows[i].spec.role == transport::FlowRole::LongHaul) {
            ++lh;
            worst = std::max(worst, r.slowdown[i]);
        }
    }
    j["run"] = {{"events", r.events},
                {"end_time_ms", sim::to_millis(r.end_time)},
                {"all_flows_complete", r.all_complete},
                {"finite_flows", finite},
                {"completed_flows", complete},
                {"long_haul_flows", lh}};
    j["headline"] = {{"max_long_haul_slowdown", max_long_haul_slowdown(r)},
                     {"long_haul_drops", r.long_haul_drops},
                     {"long_haul_drops_dest_dc", r.long_haul_drops_dest_dc},
                     {"long_haul_drops_source_exits", r.long_haul_drops_source_exits},
                     {"long_haul_retransmitted_bytes", r.long_haul_retransmitted_bytes},
                     {"long_haul_overhead_bytes", r.long_haul_overhead_bytes},
                     {"deflection_overhead_bytes", r.deflection_overhead_bytes},
                     {"deflection_overhead_packet_hops", r.deflection_overhead_packet_hops},
                     {"spillway_port_drops", r.spillway_port_drops},
                     {"lossless_drops", r.lossless_drops}};
    json reasons;
    for (std::size_t k = 0; k < net::kNumDropReasons; ++k) {
        reasons[net::to_string(static_cast<net::DropReason>(k))] = r.drops_by_reason[k];
    }
    j["drops_by_reason"] = reasons;
    j["conservation"] = {{"packets_created", r.conservation.created},
                         {"packets_delivered", r.conservation.delivered},
                         {"packets_dropped", r.conservation.dropped},
                         {"packets_in_flight", r.conservation.in_flight},
                         {"holds", r.conservation.holds()}};
    const auto& p = r.provisioning;
    j["provisioning"] = {{"cross_dc_flows", p.cross_dc_flows},
                         {"aggregate_rate_gbps", p.aggregate_rate_bps / 1e9},
                         {"collision_ms", sim::to_millis(p.collision)},
                         {"required_bytes", p.required_bytes},
                         {"capacity_bytes", p.capacity_bytes},
                         {"pass", p.pass}};
    const auto& s = r.spillways;
    j["spillways"] = {{"packets_in", s.packets_in},
                      {"packets_returning", s.packets_returning},
                      {"packets_reinjected", s.packets_reinjected},
                      {"packets_buffered_at_end", s.packets_buffered},
                      {"overflow_drops", s.overflow_drops},
                      {"probes", s.probes},
                      {"forced_probes", s.forced_probes},
                      {"full_bursts", s.full_bursts},
                      {"peak_node_bytes", s.peak_node_bytes}};
    j["figure_analog"] = figure_analog(r);
    return j;
}

void emit_outputs(const RunReport& r, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path d(dir);
    {
        auto out = open_out(d / "flows.csv");
        write_flows_csv(out, r);
    }
    {
        auto out = open_out(d / "deflections.csv");
        write_deflections_csv(out, r);
    }
    {
        auto out = open_out(d / "buffers.csv");
        write_buffers_csv(out, r);
    }
    {
        auto out = open_out(d / "cnp_bins.csv");
        write_cnp_bins_csv(out, r);
    }
    {
        auto out = open_out(d / "summary.json");
        out << summary_json(r).dump(2) << '\n';
    }
}

json topology_json(const net::Topology& topo) {
    json nodes = json::array();
    for (net::NodeId n = 0; n < topo.node_count(); ++n) {
        const auto& info = topo.node(n);
        json routes = json::object();
        const auto& r = topo.route(n);
        for (std::uint32_t a = 0; a < r.next_ports.size(); ++a) {
            if (!r.next_ports[a].empty() && info.is_switch()) routes[std::to_string(a)] = r.next_ports[a];
        }
        json ports = json::array();
        for (auto p : info.ports) {
            const auto& pi = topo.port(p);
            ports.push_back({{"local", pi.local}, {"peer_node", topo.port(pi.peer).owner}});
        }
        nodes.push_back({{"id", n},
                         {"kind", net::to_string(info.kind)},
                         {"dc", info.dc},
                         {"index", info.index},
                         {"ports", ports},
                         {"routes", routes}});
    }
    json links = json::array();
    for (net::PortId p = 0; p < topo.port_count(); p += 2) {
        const auto& a = topo.port(p);
        const auto& b = topo.port(a.peer);
        const char* kind = a.kind == net::PortKind::HostLink ? "host"
                           : a.kind == net::PortKind::Fabric ? "fabric"
                           : a.kind == net::PortKind::Dci    ? "dci"
                                                             : "spillway";
        links.push_back({{"a", a.owner}, {"b", b.owner}, {"kind", kind}, {"gbps", a.bps / 1e9},
                         {"latency_ns", a.latency}});
    }
    json groups = json::object();
    for (std::uint32_t a = static_cast<std::uint32_t>(topo.node_count()); a < topo.address_count(); ++a) {
        groups[std::to_string(a)] = topo.anycast_members(a);
    }
    return {{"nodes", nodes}, {"links", links}, {"anycast_groups", groups}};
}

}  // namespace spillway::metrics
