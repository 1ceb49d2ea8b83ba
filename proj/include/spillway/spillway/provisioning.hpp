#pragma once

#include <cstdint>
#include <vector>

#include "spillway/net/topology.hpp"
#include "spillway/transport/flow.hpp"

namespace spillway::spill {

struct ProvisioningReport {
    int cross_dc_flows = 0;
    double aggregate_rate_bps = 0.0;  // B_agg: cross-DC flows at line rate
    sim::Time collision = 0;          // T_coll: longest collective overlap seen by a cross-DC flow
    std::uint64_t required_bytes = 0;
    std::uint64_t capacity_bytes = 0; // aggregate spillway capacity of the destination DC
    bool pass = true;
};

/// B_agg · T_coll in bytes.
std::uint64_t required_buffer(double aggregate_rate_bps, sim::Time collision);

/// Compare B_agg · T_coll against the destination DC's aggregate spillway capacity.
ProvisioningReport provisioning_check(const net::Topology& topo, const std::vector<transport::FlowSpec>& flows);

}  // namespace spillway::spill
