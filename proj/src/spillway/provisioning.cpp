#include "spillway/spillway/provisioning.hpp"

#include <algorithm>
#include <cmath>

#include "spillway/workload/workload.hpp"

namespace spillway::spill {

std::uint64_t required_buffer(double aggregate_rate_bps, sim::Time collision) {
    return static_cast<std::uint64_t>(std::llround(aggregate_rate_bps * sim::to_seconds(collision) / 8.0));
}

ProvisioningReport provisioning_check(const net::Topology& topo, const std::vector<transport::FlowSpec>& flows) {
    ProvisioningReport r;
    int dest_dc = 1;
    for (const auto& f : flows) {
        if (!f.finite() || topo.node(f.src).dc == topo.node(f.dst).dc) continue;
        ++r.cross_dc_flows;
        dest_dc = topo.node(f.dst).dc;
        r.collision = std::max(r.collision, workload::collision_overlap(f, flows, topo));
    }
    r.aggregate_rate_bps = r.cross_dc_flows * topo.config().link_bps;
    r.required_bytes = r.cross_dc_flows > 0 ? required_buffer(r.aggregate_rate_bps, r.collision) : 0;
    r.capacity_bytes = topo.aggregate_spillway_capacity(dest_dc);
    r.pass = r.required_bytes <= r.capacity_bytes;
    return r;
}

}  // namespace spillway::spill
