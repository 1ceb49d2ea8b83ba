#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "spillway/net/topology.hpp"
#include "spillway/transport/flow.hpp"

namespace spillway::workload {

using transport::FlowSpec;

enum class Variant : std::uint8_t { Microbenchmark, SpineStress, DciContention, Motivation, Custom };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct WorkloadConfig {
    Variant variant = Variant::Microbenchmark;
    int long_haul_flows = 16;
    std::uint64_t long_haul_bytes = 250'000'000;
    std::vector<int> source_nodes = {2, 3};  // DC1 nodes whose GPUs source long-haul flows
    std::vector<int> dest_nodes = {0, 1};    // DC2 nodes that sink long-haul flows and run AllToAll
    bool alltoall = true;
    std::uint64_t alltoall_bytes_per_node = 4'000'000'000ULL;
    sim::Time jitter_max = 100 * sim::kMicrosecond;
    std::string flows_file;  // Custom variant only
};

/// GPUs of server `node` in `dc`.
std::vector<net::NodeId> node_gpus(const net::Topology& topo, int dc, int node);

/// n·(n−1) pairwise flows among `gpus`; total bytes are split exactly.
std::vector<FlowSpec> gen_alltoall(const std::vector<net::NodeId>& gpus, std::uint64_t total_bytes);

/// Long-haul flows DC1→DC2 plus per-node AllToAll in the destination DC.
std::vector<FlowSpec> gen_microbenchmark(const net::Topology& topo, const WorkloadConfig& cfg);

/// Variant-specific flow set (base workload plus stress or the single-flow motivation setup).
std::vector<FlowSpec> gen_variant(const net::Topology& topo, const WorkloadConfig& cfg);

/// Full flow set for a scenario: variant flows, dense ids, seeded start jitter.
std::vector<FlowSpec> generate(const net::Topology& topo, const WorkloadConfig& cfg, std::uint64_t seed);

/// Background UDP pattern that loads the destination DC's spines.
std::vector<FlowSpec> gen_spine_stress(const net::Topology& topo);

nlohmann::json flows_to_json(const std::vector<FlowSpec>& flows);
std::vector<FlowSpec> flows_from_json(const nlohmann::json& j);

/// Transmission time of `bytes` at `bps`, in ns.
sim::Time transmit_time(std::uint64_t bytes, double bps);

/// Time at which collective traffic into `dst` finishes if it runs at line rate
/// from its earliest start; -1 when no collective targets `dst`.
sim::Time collective_end(const std::vector<FlowSpec>& flows, net::NodeId dst, double bps);

/// Lower bound on a long-haul flow's FCT: its own transmission time, the part of
/// the destination's collective it cannot overlap, and the round trip.
sim::Time ideal_fct(const FlowSpec& f, const std::vector<FlowSpec>& flows, const net::Topology& topo);

/// Portion of the destination collective that overlaps the flow's arrival.
sim::Time collision_overlap(const FlowSpec& f, const std::vector<FlowSpec>& flows, const net::Topology& topo);

}  // namespace spillway::workload
