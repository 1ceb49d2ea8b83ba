#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "spillway/net/packet.hpp"
#include "spillway/sim/rng.hpp"
#include "spillway/sim/time.hpp"

namespace spillway::net {

/// Shape of the dual-DC fat-tree. Defaults reproduce the base configuration.
struct TopologyConfig {
    int gpus_per_dc = 32;
    int gpus_per_node = 8;
    int nodes_per_leaf = 1;
    int leaves = 4;
    int spines = 8;
    int exits = 8;
    double link_bps = 400e9;
    sim::Time link_latency = 1 * sim::kMicrosecond;
    int dci_links_per_exit_pair = 2;
    double dci_bps = 400e9;
    sim::Time dci_latency = 5 * sim::kMillisecond;
    int spillways_per_exit = 4;
    std::uint64_t spillway_buffer_bytes = 16'000'000'000ULL;
    std::uint64_t switch_buffer_bytes = 64'000'000ULL;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RoutingError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class NodeKind : std::uint8_t { Gpu, Leaf, Spine, Exit, Spillway };
enum class PortKind : std::uint8_t { HostLink, Fabric, Dci, SpillwayLink };

std::string to_string(NodeKind k);

struct NodeInfo {
    NodeKind kind = NodeKind::Gpu;
    int dc = 0;
    int index = 0;   // ordinal among nodes of the same kind in the same DC
    int parent = -1; // leaf index for a GPU, exit index for a spillway
    std::vector<PortId> ports;

    bool is_switch() const { return kind == NodeKind::Leaf || kind == NodeKind::Spine || kind == NodeKind::Exit; }
};

/// One endpoint of a bidirectional link. Transmitting on a port delivers to `peer`.
struct PortInfo {
    NodeId owner = kNoNode;
    std::uint16_t local = 0;  // index within owner's port list
    PortId peer = 0;
    PortKind kind = PortKind::Fabric;
    double bps = 0.0;
    sim::Time latency = 0;
};

/// Equal-cost next hops from one node, indexed by route address.
struct Route {
    std::vector<std::vector<std::uint16_t>> next_ports;
};

class Topology {
public:
    const TopologyConfig& config() const { return config_; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t port_count() const { return ports_.size(); }
    const NodeInfo& node(NodeId n) const { return nodes_.at(n); }
    const PortInfo& port(PortId p) const { return ports_.at(p); }
    const Route& route(NodeId n) const { return routes_.at(n); }

    NodeId gpu(int dc, int i) const { return gpus_.at(dc).at(i); }
    NodeId leaf(int dc, int i) const { return leaves_.at(dc).at(i); }
    NodeId spine(int dc, int i) const { return spines_.at(dc).at(i); }
    NodeId exit(int dc, int i) const { return exits_.at(dc).at(i); }
    const std::vector<NodeId>& gpus(int dc) const { return gpus_.at(dc); }
    const std::vector<NodeId>& leaves(int dc) const { return leaves_.at(dc); }
    const std::vector<NodeId>& spines(int dc) const { return spines_.at(dc); }
    const std::vector<NodeId>& exits(int dc) const { return exits_.at(dc); }

    /// Spillways in global ordinal order; the ordinal is what the identification field carries.
    const std::vector<NodeId>& spillways() const { return spillways_; }
    const std::vector<NodeId>& spillways_of_dc(int dc) const { return dc_spillways_.at(dc); }
    const std::vector<NodeId>& spillways_of_exit(NodeId exit) const;
    NodeId spillway_by_ordinal(int ordinal) const { return spillways_.at(ordinal); }
    int spillway_ordinal(NodeId n) const;

    /// Leaf switch a GPU hangs off.
    NodeId leaf_of(NodeId gpu) const;

    /// Route addresses: node ids, then one anycast address per DC, then one per exit.
    std::uint32_t address_count() const { return static_cast<std::uint32_t>(nodes_.size()) + 2 + exit_group_count_; }
    std::uint32_t dc_anycast_address(int dc) const { return static_cast<std::uint32_t>(nodes_.size()) + dc; }
    std::uint32_t exit_anycast_address(NodeId exit) const;
    bool is_anycast(std::uint32_t address) const { return address >= nodes_.size(); }
    const std::vector<NodeId>& anycast_members(std::uint32_t address) const;

    /// Local ports of `from` whose peer is `to` (several for parallel DCI links).
    std::vector<std::uint16_t> ports_between(NodeId from, NodeId to) const;

    std::uint64_t aggregate_spillway_capacity(int dc) const;

    friend Topology build_topology(const TopologyConfig& cfg);

private:
    NodeId add_node(NodeKind kind, int dc, int index, int parent);
    void connect(NodeId a, NodeId b, PortKind kind, double bps, sim::Time latency);
    void compute_routes();

    TopologyConfig config_;
    std::vector<NodeInfo> nodes_;
    std::vector<PortInfo> ports_;
    std::vector<Route> routes_;
    std::vector<std::vector<NodeId>> gpus_, leaves_, spines_, exits_, dc_spillways_;
    std::vector<NodeId> spillways_;
    std::vector<std::vector<NodeId>> exit_spillways_;  // indexed by node id (empty unless exit)
    std::vector<std::vector<NodeId>> anycast_members_; // indexed by address - node_count
    std::vector<int> spillway_ordinal_;
    std::uint32_t exit_group_count_ = 0;
};

/// Instantiate the two-DC fat-tree with DCI pairs and spillway attachments, and
/// compute shortest-path ECMP routes. Throws ConfigError on invalid shapes.
Topology build_topology(const TopologyConfig& cfg);

/// Pick an egress port toward `address` from `node`: uniform over the ECMP set.
std::uint16_t next_hop(const Topology& topo, NodeId node, std::uint32_t address, sim::Rng& rng);

/// Route address a packet is forwarded on: its encapsulation target, else its destination.
inline std::uint32_t route_address(const Packet& pkt) {
    return pkt.encap ? pkt.encap->target.address : pkt.dst;
}

/// Serialization delay in (fractional) nanoseconds.
constexpr double serialization_ns(std::uint64_t bytes, double bps) { return static_cast<double>(bytes) * 8.0 / bps * 1e9; }

}  // namespace spillway::net
