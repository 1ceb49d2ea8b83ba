#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "spillway/metrics/config.hpp"
#include "spillway/net/network.hpp"
#include "spillway/spillway/provisioning.hpp"
#include "spillway/spillway/spillway_node.hpp"
#include "spillway/transport/flow.hpp"

namespace spillway::metrics {

/// Raised when an end-of-run invariant does not hold.
class InvariantError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    bool sample_buffers = true;
    spill::SpillwayTrace* trace = nullptr;
    /// Flow set to use instead of the generated one (ids must be dense).
    const std::vector<transport::FlowSpec>* flows = nullptr;
    bool check_invariants = true;
};

struct BufferSeries {
    std::vector<net::NodeId> nodes;            // switches and spillways, in node order
    std::vector<sim::Time> times;
    std::vector<std::vector<std::uint64_t>> rows;  // rows[t][i] is nodes[i]'s occupancy
    std::vector<std::uint64_t> spillway_total;     // destination-DC spillways, per sample
};

struct Conservation {
    std::uint64_t created = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t in_flight = 0;
    bool holds() const { return created == delivered + dropped + in_flight; }
};

struct SpillwayTotals {
    std::uint64_t packets_in = 0;
    std::uint64_t packets_returning = 0;
    std::uint64_t packets_reinjected = 0;
    std::uint64_t packets_buffered = 0;
    std::uint64_t overflow_drops = 0;
    std::uint64_t probes = 0;
    std::uint64_t forced_probes = 0;
    std::uint64_t full_bursts = 0;
    std::uint64_t peak_node_bytes = 0;
};

struct RunReport {
    ScenarioConfig config;
    std::vector<transport::FlowRecord> flows;
    std::vector<sim::Time> ideal;       // per flow; 0 for background flows
    std::vector<double> slowdown;       // per flow; -1 when incomplete or unbounded
    std::vector<std::uint64_t> deflection_histogram;  // long-haul data packets by deflection count
    std::uint64_t long_haul_packets_total = 0;
    std::uint64_t long_haul_drops = 0;
    std::uint64_t long_haul_drops_dest_dc = 0;
    std::uint64_t long_haul_drops_source_exits = 0;
    std::uint64_t long_haul_overhead_bytes = 0;        // retransmitted bytes that crossed the DCI
    std::uint64_t long_haul_retransmitted_bytes = 0;
    std::uint64_t deflection_overhead_bytes = 0;
    std::uint64_t deflection_overhead_packet_hops = 0;
    std::uint64_t spillway_port_drops = 0;             // deflected packets lost on the way to or at a spillway
    std::uint64_t lossless_drops = 0;
    std::uint64_t control_drops = 0;
    std::array<std::uint64_t, net::kNumDropReasons> drops_by_reason{};
    std::vector<std::pair<net::NodeId, std::uint64_t>> switch_peaks;
    SpillwayTotals spillways;
    BufferSeries buffers;
    Conservation conservation;
    spill::ProvisioningReport provisioning;
    net::NetworkCounters network;
    std::uint64_t events = 0;
    sim::Time end_time = 0;
    bool all_complete = false;

    std::shared_ptr<const net::Topology> topology;
};

/// Build the network for `config`, inject the workload, run until every finite
/// flow completes or t_end, and assemble the report.
RunReport run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Headline numbers mapped to the figure each one stands in for.
nlohmann::json figure_analog(const RunReport& r);

double max_long_haul_slowdown(const RunReport& r);
double single_deflection_fraction(const RunReport& r);
/// Seconds from the spillway occupancy peak until it falls to half of it; -1 if never.
double drain_half_time(const RunReport& r);
/// Peak destination-DC spillway occupancy over aggregate capacity.
double peak_spillway_utilization(const RunReport& r);

}  // namespace spillway::metrics
