#include "spillway/net/topology.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace spillway::net {

std::string to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Gpu: return "gpu";
        case NodeKind::Leaf: return "leaf";
        case NodeKind::Spine: return "spine";
        case NodeKind::Exit: return "exit";
        case NodeKind::Spillway: return "spillway";
    }
    return "?";
}

NodeId Topology::add_node(NodeKind kind, int dc, int index, int parent) {
    NodeInfo info;
    info.kind = kind;
    info.dc = dc;
    info.index = index;
    info.parent = parent;
    nodes_.push_back(std::move(info));
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Topology::connect(NodeId a, NodeId b, PortKind kind, double bps, sim::Time latency) {
    const auto pa = static_cast<PortId>(ports_.size());
    const auto pb = pa + 1;
    PortInfo ia{a, static_cast<std::uint16_t>(nodes_[a].ports.size()), pb, kind, bps, latency};
    PortInfo ib{b, static_cast<std::uint16_t>(nodes_[b].ports.size()), pa, kind, bps, latency};
    ports_.push_back(ia);
    ports_.push_back(ib);
    nodes_[a].ports.push_back(pa);
    nodes_[b].ports.push_back(pb);
}

const std::vector<NodeId>& Topology::spillways_of_exit(NodeId exit) const {
    return exit_spillways_.at(exit);
}

int Topology::spillway_ordinal(NodeId n) const {
    const int ord = spillway_ordinal_.at(n);
    if (ord < 0) throw RoutingError("node " + std::to_string(n) + " is not a spillway");
    return ord;
}

NodeId Topology::leaf_of(NodeId gpu) const {
    const auto& info = nodes_.at(gpu);
    return leaves_.at(info.dc).at(info.parent);
}

std::uint32_t Topology::exit_anycast_address(NodeId exit) const {
    const auto& info = nodes_.at(exit);
    return static_cast<std::uint32_t>(nodes_.size()) + 2 + info.dc * config_.exits + info.index;
}

const std::vector<NodeId>& Topology::anycast_members(std::uint32_t address) const {
    return anycast_members_.at(address - nodes_.size());
}

std::vector<std::uint16_t> Topology::ports_between(NodeId from, NodeId to) const {
    std::vector<std::uint16_t> out;
    for (PortId p : nodes_.at(from).ports) {
        if (ports_[ports_[p].peer].owner == to) out.push_back(ports_[p].local);
    }
    return out;
}

std::uint64_t Topology::aggregate_spillway_capacity(int dc) const {
    return static_cast<std::uint64_t>(dc_spillways_.at(dc).size()) * config_.spillway_buffer_bytes;
}

void Topology::compute_routes() {
    const auto n = nodes_.size();
    const std::uint32_t addresses = address_count();
    routes_.assign(n, Route{});
    for (auto& r : routes_) r.next_ports.resize(addresses);

    constexpr int kInf = std::numeric_limits<int>::max();
    std::vector<int> dist(n);
    std::deque<NodeId> frontier;
    for (std::uint32_t addr = 0; addr < addresses; ++addr) {
        std::vector<NodeId> members;
        if (is_anycast(addr)) {
            members = anycast_members(addr);
        } else if (!nodes_[addr].is_switch()) {
            members.push_back(addr);
        } else {
            continue;  // switches are not traffic endpoints
        }
        if (members.empty()) continue;
        std::fill(dist.begin(), dist.end(), kInf);
        frontier.clear();
        for (NodeId m : members) {
            dist[m] = 0;
            frontier.push_back(m);
        }
        while (!frontier.empty()) {
            const NodeId cur = frontier.front();
            frontier.pop_front();
            // Endpoints other than the members never forward.
            if (dist[cur] > 0 && !nodes_[cur].is_switch()) continue;
            for (PortId p : nodes_[cur].ports) {
                const NodeId nb = ports_[ports_[p].peer].owner;
                if (dist[nb] != kInf) continue;
                if (!nodes_[nb].is_switch()) continue;
                dist[nb] = dist[cur] + 1;
                frontier.push_back(nb);
            }
        }
        for (NodeId s = 0; s < n; ++s) {
            if (dist[s] == kInf || dist[s] == 0) continue;
            auto& hops = routes_[s].next_ports[addr];
            for (PortId p : nodes_[s].ports) {
                const NodeId nb = ports_[ports_[p].peer].owner;
                if (dist[nb] != dist[s] - 1) continue;
                const bool member = dist[nb] == 0;
                if (!member && !nodes_[nb].is_switch()) continue;
                hops.push_back(ports_[p].local);
            }
        }
    }
    // Endpoints have a single uplink; point every address at it.
    for (NodeId s = 0; s < n; ++s) {
        if (nodes_[s].is_switch()) continue;
        for (std::uint32_t addr = 0; addr < addresses; ++addr) {
            if (addr == s) continue;
            routes_[s].next_ports[addr] = {0};
        }
    }
}

Topology build_topology(const TopologyConfig& cfg) {
    auto positive = [](int v, const char* name) {
        if (v <= 0) throw ConfigError(std::string("topology.") + name + " must be positive");
    };
    positive(cfg.gpus_per_dc, "gpus_per_dc");
    positive(cfg.gpus_per_node, "gpus_per_node");
    positive(cfg.nodes_per_leaf, "nodes_per_leaf");
    positive(cfg.leaves, "leaves");
    positive(cfg.spines, "spines");
    positive(cfg.exits, "exits");
    positive(cfg.dci_links_per_exit_pair, "dci_links_per_exit_pair");
    if (cfg.spillways_per_exit < 0) throw ConfigError("topology.spillways_per_exit must be non-negative");
    if (cfg.link_bps <= 0 || cfg.dci_bps <= 0) throw ConfigError("topology link bandwidths must be positive");
    if (cfg.link_latency < 0 || cfg.dci_latency <= 0) throw ConfigError("topology latencies must be positive");
    if (cfg.gpus_per_dc != cfg.leaves * cfg.nodes_per_leaf * cfg.gpus_per_node) {
        throw ConfigError("topology.gpus_per_dc must equal leaves * nodes_per_leaf * gpus_per_node");
    }
    if (cfg.spines != cfg.exits) {
        throw ConfigError("topology: spine radix toward exits (" + std::to_string(cfg.exits) +
                          ") must match the spine count (" + std::to_string(cfg.spines) + ")");
    }

    Topology t;
    t.config_ = cfg;
    t.gpus_.resize(2);
    t.leaves_.resize(2);
    t.spines_.resize(2);
    t.exits_.resize(2);
    t.dc_spillways_.resize(2);
    const int gpus_per_leaf = cfg.nodes_per_leaf * cfg.gpus_per_node;
    for (int dc = 0; dc < 2; ++dc) {
        for (int i = 0; i < cfg.gpus_per_dc; ++i) t.gpus_[dc].push_back(t.add_node(NodeKind::Gpu, dc, i, i / gpus_per_leaf));
        for (int i = 0; i < cfg.leaves; ++i) t.leaves_[dc].push_back(t.add_node(NodeKind::Leaf, dc, i, -1));
        for (int i = 0; i < cfg.spines; ++i) t.spines_[dc].push_back(t.add_node(NodeKind::Spine, dc, i, -1));
        for (int i = 0; i < cfg.exits; ++i) t.exits_[dc].push_back(t.add_node(NodeKind::Exit, dc, i, -1));
        for (int e = 0; e < cfg.exits; ++e) {
            for (int k = 0; k < cfg.spillways_per_exit; ++k) {
                const NodeId s = t.add_node(NodeKind::Spillway, dc, e * cfg.spillways_per_exit + k, e);
                t.dc_spillways_[dc].push_back(s);
                t.spillways_.push_back(s);
            }
        }
    }
    t.exit_spillways_.resize(t.nodes_.size());
    t.spillway_ordinal_.assign(t.nodes_.size(), -1);
    for (std::size_t ord = 0; ord < t.spillways_.size(); ++ord) {
        const NodeId s = t.spillways_[ord];
        t.spillway_ordinal_[s] = static_cast<int>(ord);
        const auto& info = t.nodes_[s];
        t.exit_spillways_[t.exits_[info.dc][info.parent]].push_back(s);
    }

    for (int dc = 0; dc < 2; ++dc) {
        for (int i = 0; i < cfg.gpus_per_dc; ++i) {
            t.connect(t.gpus_[dc][i], t.leaves_[dc][i / gpus_per_leaf], PortKind::HostLink, cfg.link_bps, cfg.link_latency);
        }
        for (NodeId l : t.leaves_[dc])
            for (NodeId s : t.spines_[dc]) t.connect(l, s, PortKind::Fabric, cfg.link_bps, cfg.link_latency);
        for (NodeId s : t.spines_[dc])
            for (NodeId e : t.exits_[dc]) t.connect(s, e, PortKind::Fabric, cfg.link_bps, cfg.link_latency);
        for (NodeId e : t.exits_[dc])
            for (NodeId sp : t.exit_spillways_[e]) t.connect(e, sp, PortKind::SpillwayLink, cfg.link_bps, cfg.link_latency);
    }
    for (int i = 0; i < cfg.exits; ++i) {
        for (int k = 0; k < cfg.dci_links_per_exit_pair; ++k) {
            t.connect(t.exits_[0][i], t.exits_[1][i], PortKind::Dci, cfg.dci_bps, cfg.dci_latency);
        }
    }

    t.exit_group_count_ = static_cast<std::uint32_t>(2 * cfg.exits);
    t.anycast_members_.resize(2 + t.exit_group_count_);
    for (int dc = 0; dc < 2; ++dc) {
        t.anycast_members_[dc] = t.dc_spillways_[dc];
        for (int e = 0; e < cfg.exits; ++e) {
            t.anycast_members_[2 + dc * cfg.exits + e] = t.exit_spillways_[t.exits_[dc][e]];
        }
    }
    t.compute_routes();
    return t;
}

std::uint16_t next_hop(const Topology& topo, NodeId node, std::uint32_t address, sim::Rng& rng) {
    const auto& hops = topo.route(node).next_ports.at(address);
    if (hops.empty()) {
        throw RoutingError("no route from node " + std::to_string(node) + " to address " + std::to_string(address));
    }
    if (hops.size() == 1) return hops.front();
    return hops[rng.uniform_index(hops.size())];
}

}  // namespace spillway::net
