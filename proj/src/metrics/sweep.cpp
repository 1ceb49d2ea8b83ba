#include "spillway/metrics/sweep.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "spillway/metrics/outputs.hpp"
#include "spillway/metrics/runner.hpp"

namespace spillway::metrics {

std::vector<SweepRow> run_sweep(const nlohmann::json& base, const std::string& key,
                                const std::vector<std::string>& values, const std::string& out_dir,
                                unsigned threads) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<SweepRow> rows(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < values.size(); i = next++) {
            SweepRow& row = rows[i];
            row.value = values[i];
            row.dir = (fs::path(out_dir) / (key + "=" + values[i])).string();
            try {
                nlohmann::json j = base;
                apply_override(j, key + "=" + values[i]);
                const auto report = run_scenario(config_from_json(j));
                emit_outputs(report, row.dir);
                row.max_long_haul_slowdown = max_long_haul_slowdown(report);
                row.long_haul_drops = report.long_haul_drops;
                row.single_deflection_fraction = single_deflection_fraction(report);
                row.all_complete = report.all_complete;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(values.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::ofstream csv(fs::path(out_dir) / "sweep.csv", std::ios::binary);
    csv << "key,value,dir,max_long_haul_slowdown,long_haul_drops,single_deflection_fraction,all_complete,error\n";
    for (const auto& r : rows) {
        csv << key << ',' << r.value << ',' << r.dir << ',' << r.max_long_haul_slowdown << ',' << r.long_haul_drops
            << ',' << r.single_deflection_fraction << ',' << (r.all_complete ? "true" : "false") << ",\""
            << r.error << "\"\n";
    }
    return rows;
}

}  // namespace spillway::metrics
