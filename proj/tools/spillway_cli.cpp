#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "spillway/analytic/model.hpp"
#include "spillway/metrics/config.hpp"
#include "spillway/metrics/outputs.hpp"
#include "spillway/metrics/runner.hpp"
#include "spillway/metrics/sweep.hpp"
#include "spillway/spillway/provisioning.hpp"

using namespace spillway;

namespace {

nlohmann::json read_json(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw metrics::ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto text = ss.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return nlohmann::json::object();
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw metrics::ConfigError("parse error in '" + path + "': " + e.what());
    }
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Packet-level simulator for cross-DC collective traffic with spillway buffering"};
    app.require_subcommand(1);

    std::string scenario, out_dir, vary;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::vector<std::string> sets;

    auto* run = app.add_subcommand("run", "Run one scenario and write its outputs");
    run->add_option("--scenario", scenario, "Scenario config (JSON); empty file means defaults")->required();
    run->add_option("--seed", seed, "Override the scenario seed")->each([&](const std::string&) { seed_given = true; });
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--set", sets, "Override a config key, e.g. spillway.policy=sw_anycast");

    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    auto* sweep = app.add_subcommand("sweep", "Run a scenario once per value of one config key");
    sweep->add_option("--scenario", scenario, "Scenario config (JSON)")->required();
    sweep->add_option("--vary", vary, "KEY=a,b,c")->required();
    sweep->add_option("--out", out_dir, "Output directory")->required();
    sweep->add_option("--threads", threads, "Concurrent runs");

    double L = 5, alpha = 1.68, tr = 5, ta = 10;
    std::string sweep_spec, model_out;
    auto* model = app.add_subcommand("model", "Evaluate the worst-case FCT model (times in ms)");
    model->add_option("--L", L, "One-way cross-DC delay (ms)");
    model->add_option("--alpha", alpha, "RTO multiplier");
    model->add_option("--Tr", tr, "Remote flow transmission time (ms)");
    model->add_option("--Ta", ta, "Local collective time (ms)");
    model->add_option("--sweep", sweep_spec,
                      "Heatmap grid 'L=5,10,20,30;Tr=1:50:1;Ta=1:50:1' (ms); emits CSV");
    model->add_option("--out", model_out, "CSV file (default stdout)");

    auto* validate = app.add_subcommand("validate", "Check a config and report buffer provisioning");
    validate->add_option("--scenario", scenario, "Scenario config (JSON)")->required();

    auto* topology = app.add_subcommand("topology", "Dump the instantiated topology as JSON");
    topology->add_option("--scenario", scenario, "Scenario config (JSON)");

    auto* flows = app.add_subcommand("flows", "Export the generated flow set as JSON");
    flows->add_option("--scenario", scenario, "Scenario config (JSON)");
    flows->add_option("--seed", seed, "Override the scenario seed")->each([&](const std::string&) { seed_given = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto j = read_json(scenario);
            for (const auto& s : sets) metrics::apply_override(j, s);
            auto cfg = metrics::config_from_json(j);
            if (seed_given) cfg.seed = seed;
            const auto report = metrics::run_scenario(cfg);
            metrics::emit_outputs(report, out_dir);
            if (!report.provisioning.pass) std::cerr << "warning: spillway capacity below B_agg * T_coll\n";
            std::cout << "max long-haul slowdown " << metrics::max_long_haul_slowdown(report) << ", long-haul drops "
                      << report.long_haul_drops << ", outputs in " << out_dir << '\n';
            return report.all_complete ? 0 : 3;
        }
        if (*sweep) {
            const auto eq = vary.find('=');
            if (eq == std::string::npos) throw metrics::ConfigError("--vary must look like KEY=a,b,c");
            std::vector<std::string> values;
            std::stringstream ss(vary.substr(eq + 1));
            std::string v;
            while (std::getline(ss, v, ',')) values.push_back(v);
            const auto rows = metrics::run_sweep(read_json(scenario), vary.substr(0, eq), values, out_dir, threads);
            int rc = 0;
            for (const auto& r : rows) {
                std::cout << r.value << ": ";
                if (!r.error.empty()) {
                    std::cout << "error: " << r.error << '\n';
                    rc = 2;
                } else {
                    std::cout << "max slowdown " << r.max_long_haul_slowdown << ", drops " << r.long_haul_drops << '\n';
                }
            }
            return rc;
        }
        if (*model) {
            if (sweep_spec.empty()) {
                analytic::ModelParams p{L * 1e-3, tr * 1e-3, ta * 1e-3, alpha};
                std::cout << "case " << analytic::fct_case(p) << ", fct_ms " << analytic::fct_model(p) * 1e3
                          << ", ideal_ms " << analytic::ideal_fct(p) * 1e3 << ", slowdown " << analytic::slowdown(p)
                          << '\n';
                return 0;
            }
            analytic::SweepSpec spec;
            spec.alpha = alpha;
            std::stringstream ss(sweep_spec);
            std::string part;
            while (std::getline(ss, part, ';')) {
                const auto eq = part.find('=');
                if (eq == std::string::npos) throw metrics::ConfigError("bad --sweep part '" + part + "'");
                const auto name = part.substr(0, eq);
                const auto val = part.substr(eq + 1);
                if (name == "L") {
                    spec.L_values.clear();
                    for (double x : parse_list(val)) spec.L_values.push_back(x * 1e-3);
                } else if (name == "Tr" || name == "Ta") {
                    std::vector<double> r;
                    std::stringstream rs(val);
                    std::string x;
                    while (std::getline(rs, x, ':')) r.push_back(std::stod(x) * 1e-3);
                    if (r.size() != 3) throw metrics::ConfigError("range must be min:max:step, got '" + val + "'");
                    (name == "Tr" ? spec.tr_min : spec.ta_min) = r[0];
                    (name == "Tr" ? spec.tr_max : spec.ta_max) = r[1];
                    (name == "Tr" ? spec.tr_step : spec.ta_step) = r[2];
                } else {
                    throw metrics::ConfigError("unknown sweep axis '" + name + "'");
                }
            }
            const auto points = analytic::sweep(spec);
            if (model_out.empty()) {
                analytic::write_sweep_csv(std::cout, points);
            } else {
                std::ofstream out(model_out);
                analytic::write_sweep_csv(out, points);
            }
            return 0;
        }
        if (*validate) {
            const auto cfg = metrics::config_from_json(read_json(scenario));
            const auto topo = net::build_topology(cfg.effective_topology());
            std::vector<transport::FlowSpec> fl;
            if (cfg.workload.variant == workload::Variant::Custom) {
                fl = workload::flows_from_json(read_json(cfg.workload.flows_file));
            } else {
                fl = workload::generate(topo, cfg.workload, cfg.seed);
            }
            const auto p = spill::provisioning_check(topo, fl);
            std::cout << "config ok: " << fl.size() << " flows, " << topo.node_count() << " nodes\n"
                      << "provisioning: required " << p.required_bytes << " B (" << p.cross_dc_flows
                      << " cross-DC flows x " << p.aggregate_rate_bps / std::max(1, p.cross_dc_flows) / 1e9
                      << " Gb/s x " << sim::to_millis(p.collision) << " ms), capacity " << p.capacity_bytes << " B: "
                      << (p.pass ? "pass" : "FAIL (advisory)") << '\n';
            return 0;
        }
        if (*topology) {
            const auto cfg = metrics::config_from_json(read_json(scenario));
            std::cout << metrics::topology_json(net::build_topology(cfg.effective_topology())).dump(1) << '\n';
            return 0;
        }
        if (*flows) {
            auto cfg = metrics::config_from_json(read_json(scenario));
            if (seed_given) cfg.seed = seed;
            const auto topo = net::build_topology(cfg.effective_topology());
            std::cout << workload::flows_to_json(workload::generate(topo, cfg.workload, cfg.seed)).dump(1) << '\n';
            return 0;
        }
    } catch (const metrics::InvariantError& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
