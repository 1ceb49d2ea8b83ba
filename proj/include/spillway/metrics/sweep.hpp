#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace spillway::metrics {

struct SweepRow {
    std::string value;
    std::string dir;
    double max_long_haul_slowdown = -1.0;
    std::uint64_t long_haul_drops = 0;
    double single_deflection_fraction = 0.0;
    bool all_complete = false;
    std::string error;
};

/// Run `base` once per value of `key`, each into `out_dir/<key>=<value>`, using
/// up to `threads` concurrent runs. Writes `out_dir/sweep.csv`.
std::vector<SweepRow> run_sweep(const nlohmann::json& base, const std::string& key,
                                const std::vector<std::string>& values, const std::string& out_dir,
                                unsigned threads);

}  // namespace spillway::metrics
