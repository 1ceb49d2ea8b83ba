#include "spillway/workload/workload.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spillway/sim/rng.hpp"

namespace spillway::workload {

using net::NodeId;
using net::TrafficClass;
using transport::FlowRole;

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Microbenchmark: return "MICROBENCHMARK";
        case Variant::SpineStress: return "SPINE_STRESS";
        case Variant::DciContention: return "DCI_CONTENTION";
        case Variant::Motivation: return "MOTIVATION";
        case Variant::Custom: return "CUSTOM";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s == "MICROBENCHMARK") return Variant::Microbenchmark;
    if (s == "SPINE_STRESS") return Variant::SpineStress;
    if (s == "DCI_CONTENTION") return Variant::DciContention;
    if (s == "MOTIVATION") return Variant::Motivation;
    if (s == "CUSTOM") return Variant::Custom;
    throw net::ConfigError("unknown workload variant '" + s + "'");
}

std::vector<NodeId> node_gpus(const net::Topology& topo, int dc, int node) {
    const int per = topo.config().gpus_per_node;
    const int nodes = topo.config().gpus_per_dc / per;
    if (node < 0 || node >= nodes) {
        throw net::ConfigError("node " + std::to_string(node) + " out of range (DC has " + std::to_string(nodes) + ")");
    }
    std::vector<NodeId> out;
    for (int k = 0; k < per; ++k) out.push_back(topo.gpu(dc, node * per + k));
    return out;
}

std::vector<FlowSpec> gen_alltoall(const std::vector<NodeId>& gpus, std::uint64_t total_bytes) {
    std::vector<FlowSpec> out;
    const std::uint64_t n = gpus.size();
    if (n < 2 || total_bytes == 0) return out;
    const std::uint64_t pairs = n * (n - 1);
    const std::uint64_t base = total_bytes / pairs;
    std::uint64_t extra = total_bytes % pairs;
    for (NodeId src : gpus) {
        for (NodeId dst : gpus) {
            if (src == dst) continue;
            FlowSpec f;
            f.src = src;
            f.dst = dst;
            f.size = base + (extra > 0 ? 1 : 0);
            if (extra > 0) --extra;
            f.cls = TrafficClass::LosslessLocal;
            f.role = FlowRole::Collective;
            out.push_back(f);
        }
    }
    return out;
}

std::vector<FlowSpec> gen_microbenchmark(const net::Topology& topo, const WorkloadConfig& cfg) {
    std::vector<NodeId> sources, sinks;
    for (int n : cfg.source_nodes)
        for (NodeId g : node_gpus(topo, 0, n)) sources.push_back(g);
    for (int n : cfg.dest_nodes)
        for (NodeId g : node_gpus(topo, 1, n)) sinks.push_back(g);
    const auto count = static_cast<std::size_t>(cfg.long_haul_flows);
    if (count > sources.size() || count > sinks.size()) {
        throw net::ConfigError("workload.long_haul_flows exceeds the GPUs of the source or destination nodes");
    }
    std::vector<FlowSpec> out;
    for (std::size_t i = 0; i < count; ++i) {
        FlowSpec f;
        f.src = sources[i];
        f.dst = sinks[i];
        f.size = cfg.long_haul_bytes;
        f.cls = TrafficClass::LossyCrossDc;
        f.role = FlowRole::LongHaul;
        out.push_back(f);
    }
    if (cfg.alltoall) {
        for (int n : cfg.dest_nodes) {
            auto a2a = gen_alltoall(node_gpus(topo, 1, n), cfg.alltoall_bytes_per_node);
            out.insert(out.end(), a2a.begin(), a2a.end());
        }
    }
    return out;
}

std::vector<FlowSpec> gen_spine_stress(const net::Topology& topo) {
    const auto& c = topo.config();
    const int per_leaf = c.nodes_per_leaf * c.gpus_per_node;
    const int half = c.leaves / 2;
    const int upper = c.leaves - half;
    std::vector<FlowSpec> out;
    for (int l = 0; l < c.leaves; ++l) {
        int target;
        if (l < half) {
            target = half + (l % upper);
        } else {
            target = half + ((l - half + 1) % upper);
        }
        for (int k = 0; k < per_leaf; ++k) {
            const int dst_k = target == l ? (k + 1) % per_leaf : k;
            if (target == l && dst_k == k) continue;  // single-GPU leaf has no partner
            FlowSpec f;
            f.src = topo.gpu(1, l * per_leaf + k);
            f.dst = topo.gpu(1, target * per_leaf + dst_k);
            f.size = 0;
            f.cls = TrafficClass::BackgroundUdp;
            f.role = FlowRole::Background;
            out.push_back(f);
        }
    }
    return out;
}

std::vector<FlowSpec> gen_variant(const net::Topology& topo, const WorkloadConfig& cfg) {
    switch (cfg.variant) {
        case Variant::Microbenchmark:
        case Variant::DciContention:
            return gen_microbenchmark(topo, cfg);
        case Variant::SpineStress: {
            auto out = gen_microbenchmark(topo, cfg);
            auto udp = gen_spine_stress(topo);
            out.insert(out.end(), udp.begin(), udp.end());
            return out;
        }
        case Variant::Motivation: {
            WorkloadConfig m = cfg;
            m.long_haul_flows = 1;
            if (m.dest_nodes.empty()) throw net::ConfigError("workload.dest_nodes must not be empty");
            m.dest_nodes.resize(1);
            return gen_microbenchmark(topo, m);
        }
        case Variant::Custom:
            throw net::ConfigError("CUSTOM flow sets are loaded from workload.flows_file");
    }
    return {};
}

std::vector<FlowSpec> generate(const net::Topology& topo, const WorkloadConfig& cfg, std::uint64_t seed) {
    auto flows = gen_variant(topo, cfg);
    sim::Rng rng(seed, 0x3017'7E55ULL);
    for (std::size_t i = 0; i < flows.size(); ++i) {
        flows[i].id = static_cast<transport::FlowId>(i);
        flows[i].jitter = cfg.jitter_max > 0
                              ? static_cast<sim::Time>(rng.uniform_index(static_cast<std::uint64_t>(cfg.jitter_max)))
                              : 0;
    }
    return flows;
}

nlohmann::json flows_to_json(const std::vector<FlowSpec>& flows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : flows) {
        arr.push_back({{"id", f.id},
                       {"src", f.src},
                       {"dst", f.dst},
                       {"size", f.size},
                       {"class", std::string(net::to_string(f.cls))},
                       {"role", transport::to_string(f.role)},
                       {"start_ns", f.start},
                       {"jitter_ns", f.jitter}});
    }
    return nlohmann::json{{"flows", arr}};
}

static TrafficClass class_from_string(const std::string& s) {
    if (s == "LOSSLESS_LOCAL") return TrafficClass::LosslessLocal;
    if (s == "LOSSY_CROSSDC") return TrafficClass::LossyCrossDc;
    if (s == "BACKGROUND_UDP") return TrafficClass::BackgroundUdp;
    throw net::ConfigError("flow class must be LOSSLESS_LOCAL, LOSSY_CROSSDC or BACKGROUND_UDP, got '" + s + "'");
}

std::vector<FlowSpec> flows_from_json(const nlohmann::json& j) {
    std::vector<FlowSpec> out;
    const auto& arr = j.at("flows");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& e = arr[i];
        FlowSpec f;
        f.id = static_cast<transport::FlowId>(i);
        f.src = e.at("src").get<NodeId>();
        f.dst = e.at("dst").get<NodeId>();
        f.size = e.at("size").get<std::uint64_t>();
        f.cls = class_from_string(e.at("class").get<std::string>());
        f.role = transport::flow_role_from_string(e.value("role", std::string(
            f.cls == TrafficClass::LosslessLocal ? "collective"
            : f.cls == TrafficClass::BackgroundUdp ? "background" : "long_haul")));
        f.start = e.value("start_ns", sim::Time{0});
        f.jitter = e.value("jitter_ns", sim::Time{0});
        if (f.start < 0 || f.jitter < 0) throw net::ConfigError("flow start and jitter must be non-negative");
        out.push_back(f);
    }
    return out;
}

sim::Time transmit_time(std::uint64_t bytes, double bps) {
    return static_cast<sim::Time>(std::llround(static_cast<double>(bytes) * 8.0 / bps * 1e9));
}

sim::Time collective_end(const std::vector<FlowSpec>& flows, NodeId dst, double bps) {
    sim::Time first = -1;
    std::uint64_t bytes = 0;
    for (const auto& f : flows) {
        if (f.role != FlowRole::Collective || f.dst != dst) continue;
        first = first < 0 ? f.start_time() : std::min(first, f.start_time());
        bytes += f.size;
    }
    return first < 0 ? -1 : first + transmit_time(bytes, bps);
}

sim::Time collision_overlap(const FlowSpec& f, const std::vector<FlowSpec>& flows, const net::Topology& topo) {
    const auto& c = topo.config();
    const sim::Time end = collective_end(flows, f.dst, c.link_bps);
    if (end < 0) return 0;
    const bool cross = topo.node(f.src).dc != topo.node(f.dst).dc;
    const sim::Time arrival = f.start_time() + (cross ? c.dci_latency : 0);
    return std::max<sim::Time>(0, end - arrival);
}

sim::Time ideal_fct(const FlowSpec& f, const std::vector<FlowSpec>& flows, const net::Topology& topo) {
    const auto& c = topo.config();
    const bool cross = topo.node(f.src).dc != topo.node(f.dst).dc;
    if (!cross) return transmit_time(f.size, c.link_bps);
    return transmit_time(f.size, c.link_bps) + collision_overlap(f, flows, topo) + 2 * c.dci_latency;
}

}  // namespace spillway::workload
