#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "spillway/net/topology.hpp"
#include "spillway/spillway/spillway_node.hpp"
#include "spillway/switch/switch_node.hpp"
#include "spillway/transport/host.hpp"
#include "spillway/workload/workload.hpp"

namespace spillway::metrics {

enum class Fallback : std::uint8_t { Drop, NeighborDeflect };

struct SpillwayBlock {
    bool enabled = true;
    sw::SelectPolicy select;
    spill::SpillwayParams params;
    int per_exit = 4;
    Fallback fallback = Fallback::Drop;
};

struct TransportBlock {
    double rto_alpha = 1.68;
    bool fast_cnp = true;
    transport::TransportParams params;  // rto is derived from rto_alpha and the DCI latency
};

/// Everything one experiment needs. Defaults reproduce the base configuration.
struct ScenarioConfig {
    std::string name = "default";
    net::TopologyConfig topology;
    sw::SwitchParams switch_params;
    SpillwayBlock spillway;
    TransportBlock transport;
    workload::WorkloadConfig workload;
    std::uint64_t seed = 1;
    sim::Time t_end = 500 * sim::kMillisecond;
    sim::Time sample_interval = 10 * sim::kMicrosecond;

    /// Switch parameters with the deflection mode and fast-CNP flag folded in.
    sw::SwitchParams effective_switch() const;
    /// Transport parameters with RTO = alpha · 2L and the MTU applied.
    transport::TransportParams effective_transport() const;
    /// Topology with variant adjustments (DCI contention halves the DCI links).
    net::TopologyConfig effective_topology() const;
};

class ConfigError : public net::ConfigError {
public:
    using net::ConfigError::ConfigError;
};

/// Parse and validate. Unknown keys and bad values fail with their key path.
ScenarioConfig config_from_json(const nlohmann::json& j);
ScenarioConfig load_config(const std::string& path);

/// Apply "a.b.c=value" (value parsed as JSON, else taken as a string).
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Canonical JSON of the full effective configuration.
nlohmann::json config_to_json(const ScenarioConfig& c);

void validate(const ScenarioConfig& c);

}  // namespace spillway::metrics
