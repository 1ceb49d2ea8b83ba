#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "spillway/metrics/runner.hpp"

namespace spillway::metrics {

void write_flows_csv(std::ostream& os, const RunReport& r);
void write_deflections_csv(std::ostream& os, const RunReport& r);
void write_buffers_csv(std::ostream& os, const RunReport& r);
void write_cnp_bins_csv(std::ostream& os, const RunReport& r);
nlohmann::json summary_json(const RunReport& r);

/// Write flows.csv, deflections.csv, buffers.csv, cnp_bins.csv and summary.json into `dir`.
void emit_outputs(const RunReport& r, const std::string& dir);

/// Topology echo: nodes, links and ECMP next hops.
nlohmann::json topology_json(const net::Topology& topo);

}  // namespace spillway::metrics
