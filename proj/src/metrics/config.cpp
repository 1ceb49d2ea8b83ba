#include "spillway/metrics/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace spillway::metrics {

using nlohmann::json;

namespace {

/// Reads one JSON object, remembering which keys were consumed.
class Block {
public:
    Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    template <typename T>
    bool get(const char* key, T& out) {
        if (!j_.contains(key)) return false;
        seen_.insert(key);
        const json& v = j_.at(key);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError(at(key) + ": expected a boolean");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw ConfigError(at(key) + ": expected an integer");
                if constexpr (std::is_unsigned_v<T>) {
                    if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
                        throw ConfigError(at(key) + ": expected a non-negative integer");
                    }
                }
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) throw ConfigError(at(key) + ": expected a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError(at(key) + ": expected a string");
            }
            out = v.get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(at(key) + ": " + e.what());
        }
        return true;
    }

    bool get_us(const char* key, sim::Time& out) { return get_scaled(key, out, 1e3); }
    bool get_ms(const char* key, sim::Time& out) { return get_scaled(key, out, 1e6); }

    bool get_gbps(const char* key, double& out) {
        double v;
        if (!get(key, v)) return false;
        out = v * 1e9;
        return true;
    }

    Block sub(const char* key) {
        seen_.insert(key);
        return Block(j_.at(key), at(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("unknown key '" + at(it.key()) + "'");
        }
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string where() const { return path_.empty() ? "<root>" : path_; }

private:
    bool get_scaled(const char* key, sim::Time& out, double scale) {
        double v;
        if (!get(key, v)) return false;
        if (v < 0) throw ConfigError(at(key) + ": must be non-negative");
        out = static_cast<sim::Time>(v * scale + 0.5);
        return true;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

sw::SelectMode select_mode_from(const std::string& s, const std::string& path) {
    if (s == "dc_anycast") return sw::SelectMode::DcAnycast;
    if (s == "sw_anycast") return sw::SelectMode::SwAnycast;
    if (s == "unicast") return sw::SelectMode::UnicastHash;
    throw ConfigError(path + ": policy must be dc_anycast, sw_anycast or unicast, got '" + s + "'");
}

std::string select_mode_name(sw::SelectMode m) {
    switch (m) {
        case sw::SelectMode::DcAnycast: return "dc_anycast";
        case sw::SelectMode::SwAnycast: return "sw_anycast";
        case sw::SelectMode::UnicastHash: return "unicast";
    }
    return "?";
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace

sw::SwitchParams ScenarioConfig::effective_switch() const {
    sw::SwitchParams p = switch_params;
    p.buffer_bytes = topology.switch_buffer_bytes;
    p.select = spillway.select;
    p.fast_cnp = transport.fast_cnp;
    p.cnp_interval = transport.params.cnp_interval;
    p.control_bytes = transport.params.control_bytes;
    if (spillway.enabled) {
        p.deflect = sw::DeflectPolicy::Spillway;
    } else {
        p.deflect = spillway.fallback == Fallback::NeighborDeflect ? sw::DeflectPolicy::NeighborDeflect
                                                                   : sw::DeflectPolicy::Drop;
    }
    return p;
}

transport::TransportParams ScenarioConfig::effective_transport() const {
    transport::TransportParams p = transport.params;
    const auto topo = effective_topology();
    p.rto = static_cast<sim::Time>(transport.rto_alpha * 2.0 * static_cast<double>(topo.dci_latency) + 0.5);
    p.dcqcn.line_rate = topo.link_bps;
    return p;
}

net::TopologyConfig ScenarioConfig::effective_topology() const {
    net::TopologyConfig t = topology;
    t.spillways_per_exit = spillway.per_exit;
    t.spillway_buffer_bytes = spillway.params.buffer_bytes;
    if (workload.variant == workload::Variant::DciContention) {
        t.dci_links_per_exit_pair = std::max(1, t.dci_links_per_exit_pair / 2);
    }
    return t;
}

void validate(const ScenarioConfig& c) {
    const auto& s = c.switch_params;
    require(s.ecn_kmin < s.ecn_kmax, "traffic_class: ecn_kmin_bytes must be below ecn_kmax_bytes");
    require(s.ecn_kmax <= c.topology.switch_buffer_bytes, "traffic_class: ecn_kmax_bytes must fit the switch buffer");
    require(s.ecn_pmax >= 0 && s.ecn_pmax <= 1, "traffic_class.ecn_pmax must lie in [0, 1]");
    require(s.pfc_xon < s.pfc_xoff, "traffic_class: pfc_xon_bytes must be below pfc_xoff_bytes");
    require(s.dt_alpha > 0, "traffic_class.dt_alpha must be positive");
    require(s.dt_alpha_drained > 0, "traffic_class.dt_alpha_drained must be positive");
    require(c.transport.params.mtu > 0, "traffic_class.mtu_bytes must be positive");
    require(c.transport.params.control_bytes > 0, "traffic_class.control_bytes must be positive");
    const auto& sp = c.spillway;
    require(sp.params.tau_gap > 0, "spillway.tau_gap_us must be positive");
    require(sp.params.deadline > 0, "spillway.deadline_ms must be positive");
    require(sp.params.probe_wait > 0, "spillway.probe_wait_us must be positive");
    require(sp.params.half_burst_packets > 0, "spillway.half_burst_packets must be positive");
    require(sp.params.queue_count >= 0, "spillway.queue_count must be non-negative");
    require(sp.params.buffer_bytes > 0, "spillway.buffer_bytes must be positive");
    require(sp.per_exit >= 0, "spillway.per_exit must be non-negative");
    require(!sp.enabled || sp.per_exit > 0, "spillway.enabled requires spillway.per_exit > 0");
    require(!(sp.select.mode == sw::SelectMode::UnicastHash && sp.select.sticky),
            "spillway: sticky=true requires an anycast policy for the first deflection");
    const auto& t = c.transport;
    require(t.rto_alpha > 0, "transport.rto_alpha must be positive");
    require(t.params.lossless_window > 0, "transport.lossless_window_bytes must be positive");
    require(t.params.ack_every > 0, "transport.ack_every_packets must be positive");
    require(t.params.ack_delay > 0, "transport.ack_delay_us must be positive");
    const auto& d = t.params.dcqcn;
    require(d.g > 0 && d.g < 1, "transport.dcqcn.g must lie in (0, 1)");
    require(d.alpha_timer > 0 && d.increase_timer > 0, "transport.dcqcn timers must be positive");
    require(d.rate_min > 0 && d.rate_min <= c.topology.link_bps, "transport.dcqcn.rate_min_gbps must lie in (0, link rate]");
    require(d.byte_counter > 0, "transport.dcqcn.byte_counter_bytes must be positive");
    require(d.fast_recovery_stages > 0, "transport.dcqcn.fast_recovery_stages must be positive");
    const auto& w = c.workload;
    require(w.long_haul_flows >= 0, "workload.long_haul_flows must be non-negative");
    require(w.variant != workload::Variant::Custom || !w.flows_file.empty(),
            "workload.variant CUSTOM requires workload.flows_file");
    require(c.t_end > 0, "t_end_ms must be positive");
    require(c.sample_interval > 0, "sample_interval_us must be positive");
}

ScenarioConfig config_from_json(const json& j) {
    ScenarioConfig c;
    const json doc = j.is_null() ? json::object() : j;
    Block root(doc, "");
    root.get("name", c.name);
    root.get("seed", c.seed);
    root.get_ms("t_end_ms", c.t_end);
    root.get_us("sample_interval_us", c.sample_interval);

    if (root.has("topology")) {
        auto b = root.sub("topology");
        auto& t = c.topology;
        b.get("gpus_per_dc", t.gpus_per_dc);
        b.get("gpus_per_node", t.gpus_per_node);
        b.get("nodes_per_leaf", t.nodes_per_leaf);
        b.get("leaves", t.leaves);
        b.get("spines", t.spines);
        b.get("exits", t.exits);
        b.get_gbps("link_gbps", t.link_bps);
        b.get_us("link_latency_us", t.link_latency);
        b.get("dci_links_per_exit_pair", t.dci_links_per_exit_pair);
        b.get_gbps("dci_gbps", t.dci_bps);
        b.get_ms("dci_latency_ms", t.dci_latency);
        b.get("switch_buffer_bytes", t.switch_buffer_bytes);
        b.finish();
    }
    if (root.has("traffic_class")) {
        auto b = root.sub("traffic_class");
        auto& s = c.switch_params;
        b.get("ecn_kmin_bytes", s.ecn_kmin);
        b.get("ecn_kmax_bytes", s.ecn_kmax);
        b.get("ecn_pmax", s.ecn_pmax);
        b.get("pfc_xoff_bytes", s.pfc_xoff);
        b.get("pfc_xon_bytes", s.pfc_xon);
        b.get("dt_alpha", s.dt_alpha);
        b.get("dt_alpha_drained", s.dt_alpha_drained);
        b.get("encap_bytes", s.encap_bytes);
        b.get("mtu_bytes", c.transport.params.mtu);
        b.get("control_bytes", c.transport.params.control_bytes);
        b.finish();
    }
    if (root.has("spillway")) {
        auto b = root.sub("spillway");
        auto& sp = c.spillway;
        b.get("enabled", sp.enabled);
        std::string policy;
        if (b.get("policy", policy)) sp.select.mode = select_mode_from(policy, b.at("policy"));
        const bool sticky_given = b.get("sticky", sp.select.sticky);
        if (!sticky_given && sp.select.mode == sw::SelectMode::UnicastHash) sp.select.sticky = false;
        const bool tau_given = b.get_us("tau_gap_us", sp.params.tau_gap);
        if (!b.get_us("jitter_us", sp.params.jitter) && tau_given) sp.params.jitter = sp.params.tau_gap / 6;
        b.get_ms("deadline_ms", sp.params.deadline);
        b.get_us("probe_wait_us", sp.params.probe_wait);
        b.get("half_burst_packets", sp.params.half_burst_packets);
        b.get("queue_count", sp.params.queue_count);
        b.get("buffer_bytes", sp.params.buffer_bytes);
        b.get("per_exit", sp.per_exit);
        std::string fallback;
        if (b.get("fallback", fallback)) {
            if (fallback == "drop") {
                sp.fallback = Fallback::Drop;
            } else if (fallback == "neighbor_deflect") {
                sp.fallback = Fallback::NeighborDeflect;
            } else {
                throw ConfigError(b.at("fallback") + ": must be drop or neighbor_deflect, got '" + fallback + "'");
            }
        }
        b.finish();
    }
    if (root.has("transport")) {
        auto b = root.sub("transport");
        auto& t = c.transport;
        b.get("rto_alpha", t.rto_alpha);
        b.get("fast_cnp", t.fast_cnp);
        b.get("lossless_window_bytes", t.params.lossless_window);
        b.get("ack_every_packets", t.params.ack_every);
        b.get_us("ack_delay_us", t.params.ack_delay);
        b.get_us("cnp_interval_us", t.params.cnp_interval);
        if (b.has("dcqcn")) {
            auto d = b.sub("dcqcn");
            auto& q = t.params.dcqcn;
            d.get("g", q.g);
            d.get_us("alpha_timer_us", q.alpha_timer);
            d.get_us("increase_timer_us", q.increase_timer);
            d.get("byte_counter_bytes", q.byte_counter);
            d.get_gbps("rai_gbps", q.r_ai);
            d.get_gbps("rhai_gbps", q.r_hai);
            d.get_gbps("rate_min_gbps", q.rate_min);
            d.get("fast_recovery_stages", q.fast_recovery_stages);
            d.finish();
        }
        b.finish();
    }
    if (root.has("workload")) {
        auto b = root.sub("workload");
        auto& w = c.workload;
        std::string variant;
        if (b.get("variant", variant)) {
            try {
                w.variant = workload::variant_from_string(variant);
            } catch (const net::ConfigError& e) {
                throw ConfigError(b.at("variant") + ": " + e.what());
            }
        }
        b.get("long_haul_flows", w.long_haul_flows);
        b.get("long_haul_bytes", w.long_haul_bytes);
        b.get("source_nodes", w.source_nodes);
        b.get("dest_nodes", w.dest_nodes);
        b.get("alltoall", w.alltoall);
        b.get("alltoall_bytes_per_node", w.alltoall_bytes_per_node);
        b.get_us("jitter_us", w.jitter_max);
        b.get("flows_file", w.flows_file);
        b.finish();
    }
    root.finish();
    validate(c);
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return config_from_json(json::object());
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("parse error in '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key.path=value: '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* cur = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!cur->is_object()) *cur = json::object();
        if (dot == std::string::npos) {
            (*cur)[part] = value;
            return;
        }
        cur = &(*cur)[part];
        start = dot + 1;
    }
}

json config_to_json(const ScenarioConfig& c) {
    const auto& t = c.topology;
    const auto& s = c.switch_params;
    const auto& sp = c.spillway;
    const auto& tr = c.transport;
    const auto& d = tr.params.dcqcn;
    const auto& w = c.workload;
    auto us = [](sim::Time v) { return sim::to_micros(v); };
    auto ms = [](sim::Time v) { return sim::to_millis(v); };
    json j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["t_end_ms"] = ms(c.t_end);
    j["sample_interval_us"] = us(c.sample_interval);
    j["topology"] = {{"gpus_per_dc", t.gpus_per_dc},
                     {"gpus_per_node", t.gpus_per_node},
                     {"nodes_per_leaf", t.nodes_per_leaf},
                     {"leaves", t.leaves},
                     {"spines", t.spines},
                     {"exits", t.exits},
                     {"link_gbps", t.link_bps / 1e9},
                     {"link_latency_us", us(t.link_latency)},
                     {"dci_links_per_exit_pair", t.dci_links_per_exit_pair},
                     {"dci_gbps", t.dci_bps / 1e9},
                     {"dci_latency_ms", ms(t.dci_latency)},
                     {"switch_buffer_bytes", t.switch_buffer_bytes}};
    j["traffic_class"] = {{"ecn_kmin_bytes", s.ecn_kmin},
                          {"ecn_kmax_bytes", s.ecn_kmax},
                          {"ecn_pmax", s.ecn_pmax},
                          {"pfc_xoff_bytes", s.pfc_xoff},
                          {"pfc_xon_bytes", s.pfc_xon},
                          {"dt_alpha", s.dt_alpha},
                          {"dt_alpha_drained", s.dt_alpha_drained},
                          {"encap_bytes", s.encap_bytes},
                          {"mtu_bytes", tr.params.mtu},
                          {"control_bytes", tr.params.control_bytes}};
    j["spillway"] = {{"enabled", sp.enabled},
                     {"policy", select_mode_name(sp.select.mode)},
                     {"sticky", sp.select.sticky},
                     {"tau_gap_us", us(sp.params.tau_gap)},
                     {"jitter_us", us(sp.params.jitter)},
                     {"deadline_ms", ms(sp.params.deadline)},
                     {"probe_wait_us", us(sp.params.probe_wait)},
                     {"half_burst_packets", sp.params.half_burst_packets},
                     {"queue_count", sp.params.queue_count},
                     {"buffer_bytes", sp.params.buffer_bytes},
                     {"per_exit", sp.per_exit},
                     {"fallback", sp.fallback == Fallback::Drop ? "drop" : "neighbor_deflect"}};
    j["transport"] = {{"rto_alpha", tr.rto_alpha},
                      {"fast_cnp", tr.fast_cnp},
                      {"lossless_window_bytes", tr.params.lossless_window},
                      {"ack_every_packets", tr.params.ack_every},
                      {"ack_delay_us", us(tr.params.ack_delay)},
                      {"cnp_interval_us", us(tr.params.cnp_interval)},
                      {"dcqcn",
                       {{"g", d.g},
                        {"alpha_timer_us", us(d.alpha_timer)},
                        {"increase_timer_us", us(d.increase_timer)},
                        {"byte_counter_bytes", d.byte_counter},
                        {"rai_gbps", d.r_ai / 1e9},
                        {"rhai_gbps", d.r_hai / 1e9},
                        {"rate_min_gbps", d.rate_min / 1e9},
                        {"fast_recovery_stages", d.fast_recovery_stages}}}};
    j["workload"] = {{"variant", workload::to_string(w.variant)},
                     {"long_haul_flows", w.long_haul_flows},
                     {"long_haul_bytes", w.long_haul_bytes},
                     {"source_nodes", w.source_nodes},
                     {"dest_nodes", w.dest_nodes},
                     {"alltoall", w.alltoall},
                     {"alltoall_bytes_per_node", w.alltoall_bytes_per_node},
                     {"jitter_us", us(w.jitter_max)},
                     {"flows_file", w.flows_file}};
    return j;
}

}  // namespace spillway::metrics
