// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion names (C1 ... C9) to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spillway/analytic/model.hpp"
#include "spillway/metrics/config.hpp"
#include "spillway/metrics/outputs.hpp"
#include "spillway/metrics/runner.hpp"
#include "spillway/sim/rng.hpp"
#include "support/fct_oracle.hpp"

using namespace spillway;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 3) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    os << v;
    return os.str();
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
        if (!ok) {
            pass = false;
            detail += " [x]";
        }
    }
};

struct TimedRun {
    metrics::RunReport report;
    json fig;
    double wall_s = 0.0;
};

json base(const std::string& variant) {
    json j = json::object();
    if (!variant.empty()) j["workload"]["variant"] = variant;
    return j;
}

TimedRun run(json j, const std::vector<std::string>& sets = {}) {
    for (const auto& s : sets) metrics::apply_override(j, s);
    const auto cfg = metrics::config_from_json(j);
    const auto t0 = Clock::now();
    TimedRun r;
    r.report = metrics::run_scenario(cfg);
    r.wall_s = seconds_since(t0);
    r.fig = metrics::figure_analog(r.report);
    return r;
}

// Microbenchmark runs shared by several criteria.
std::map<std::string, TimedRun> g_micro;

const TimedRun& micro(const std::string& name) {
    auto it = g_micro.find(name);
    if (it != g_micro.end()) return it->second;
    std::vector<std::string> sets;
    if (name == "sw" || name == "sw_stateless") sets.push_back("spillway.policy=sw_anycast");
    if (name == "dc_stateless" || name == "sw_stateless") sets.push_back("spillway.sticky=false");
    if (name == "unicast") sets = {"spillway.policy=unicast", "spillway.sticky=false"};
    return g_micro.emplace(name, run(base(""), sets)).first->second;
}

// ---------------------------------------------------------------------------

Outcome c1() {
    Outcome o;
    const auto t0 = Clock::now();
    sim::Rng rng(20260101, 1);
    int checked = 0;
    double worst = 0.0;
    int cases[4] = {0, 0, 0, 0};
    while (checked < 10000) {
        const std::int64_t L = 100 + static_cast<std::int64_t>(rng.uniform_index(5000));
        const std::int64_t tr = 1 + static_cast<std::int64_t>(rng.uniform_index(6 * L));
        const std::int64_t ta = 1 + static_cast<std::int64_t>(rng.uniform_index(10 * L));
        const std::int64_t rto = 2 * L + 1 + static_cast<std::int64_t>(rng.uniform_index(4 * L));
        const double alpha = static_cast<double>(rto) / static_cast<double>(2 * L);
        if (ta % rto == 0) continue;
        const analytic::ModelParams p{L * 1e-6, tr * 1e-6, ta * 1e-6, alpha};
        worst = std::max(worst, std::abs(analytic::fct_model(p) - testing::fct_oracle(L, tr, ta, alpha)));
        ++cases[analytic::fct_case(p)];
        ++checked;
    }
    const double wall = seconds_since(t0);
    o.require(worst <= 1e-6, "max |model-oracle| " + fmt(worst * 1e6, 4) + " us over 10000 tuples (cases " +
                                 std::to_string(cases[1]) + "/" + std::to_string(cases[2]) + "/" +
                                 std::to_string(cases[3]) + ")");
    o.require(cases[1] > 0 && cases[2] > 0 && cases[3] > 0, "all three cases exercised");
    o.require(wall < 10.0, "wall " + fmt(wall, 2) + " s < 10 s");
    return o;
}

Outcome c2() {
    Outcome o;
    const auto r = run(base("MOTIVATION"), {"spillway.enabled=false"});
    const auto& m = r.fig["motivation"];
    const double loss = m["loss_fraction"].get<double>();
    const double slow = m["slowdown"].get<double>();
    const double peak = m["dest_leaf_peak_mb"].get<double>();
    o.require(loss >= 0.80 && loss <= 0.95, "loss fraction " + fmt(loss) + " in [0.80, 0.95]");
    o.require(slow >= 1.4 && slow <= 1.9, "slowdown " + fmt(slow) + " in [1.4, 1.9]");
    o.require(peak > 20.0, "dest leaf peak " + fmt(peak, 1) + " MB > 20");
    o.require(r.wall_s < 120.0, "wall " + fmt(r.wall_s, 1) + " s < 120 s");
    return o;
}

Outcome c3() {
    Outcome o;
    for (const std::string name : {"dc", "sw"}) {
        const auto& r = micro(name);
        const double slow = metrics::max_long_haul_slowdown(r.report);
        o.require(r.report.long_haul_drops_dest_dc == 0,
                  name + " dest-DC drops " + std::to_string(r.report.long_haul_drops_dest_dc));
        o.require(r.report.long_haul_retransmitted_bytes == 0,
                  name + " retransmitted bytes " + std::to_string(r.report.long_haul_retransmitted_bytes));
        o.require(slow >= 0 && slow <= 1.15, name + " max slowdown " + fmt(slow) + " <= 1.15");
        o.require(r.wall_s < 300.0, name + " wall " + fmt(r.wall_s, 1) + " s < 300 s");
    }
    return o;
}

std::vector<double> buckets(const TimedRun& r) {
    return r.fig["selection"]["fraction_by_deflections_from_1"].get<std::vector<double>>();
}

Outcome c4() {
    Outcome o;
    const auto& uni = micro("unicast");
    o.require(uni.report.spillway_port_drops > 0,
              "unicast spillway-port drops " + std::to_string(uni.report.spillway_port_drops) + " > 0");
    for (const std::string name : {"dc", "sw", "dc_stateless", "sw_stateless"}) {
        const auto& r = micro(name);
        o.require(r.report.spillway_port_drops == 0,
                  name + " spillway-port drops " + std::to_string(r.report.spillway_port_drops));
        const double single = metrics::single_deflection_fraction(r.report);
        o.require(single >= 0.5 && single <= 0.7, name + " single " + fmt(single) + " in [0.5, 0.7]");
    }
    for (const std::string sfx : {"", "_stateless"}) {
        const double dc_multi = 1.0 - metrics::single_deflection_fraction(micro("dc" + sfx).report);
        const double sw_multi = 1.0 - metrics::single_deflection_fraction(micro("sw" + sfx).report);
        o.require(sw_multi <= dc_multi,
                  "multi-deflection sw" + sfx + " " + fmt(sw_multi) + " <= dc" + sfx + " " + fmt(dc_multi));
    }
    for (const std::string pol : {"dc", "sw"}) {
        auto a = buckets(micro(pol));
        auto b = buckets(micro(pol + "_stateless"));
        const std::size_t n = std::max(a.size(), b.size());
        a.resize(n, 0.0);
        b.resize(n, 0.0);
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
        o.require(worst < 0.05, pol + " sticky vs stateless max bucket gap " + fmt(worst * 100, 1) + " pp < 5");
    }
    return o;
}

Outcome c5() {
    Outcome o;
    const auto spw = run(base("SPINE_STRESS"));
    const auto nbr = run(base("SPINE_STRESS"), {"spillway.enabled=false", "spillway.fallback=neighbor_deflect"});
    const double s = metrics::max_long_haul_slowdown(spw.report);
    double n = metrics::max_long_haul_slowdown(nbr.report);
    const std::string n_str = n < 0 ? "unfinished" : fmt(n);
    if (n < 0) n = INFINITY;
    o.require(s >= 0 && s <= 1.15, "spillway max slowdown " + fmt(s) + " <= 1.15");
    o.require(n >= 1.5, "neighbor-deflect max slowdown " + n_str + " >= 1.5");
    o.require(s >= 0 && n > s, "neighbor-deflect worse than spillway");
    return o;
}

Outcome c6() {
    Outcome o;
    const auto fast = run(base("DCI_CONTENTION"));
    const auto slow = run(base("DCI_CONTENTION"), {"transport.fast_cnp=false"});
    const auto& f = fast.fig["fast_cnp"];
    const auto& s = slow.fig["fast_cnp"];
    const double rate = f["median_tx_gbps"].get<double>();
    const double fct = f["fct_ms"].get<double>();
    const double ideal = f["ideal_ms"].get<double>();
    const double fct_slow = s["fct_ms"].get<double>();
    o.require(rate >= 180 && rate <= 220, "fast CNP median tx " + fmt(rate, 1) + " Gbps in [180, 220]");
    o.require(fct > 0 && fct <= 1.25 * ideal, "fast CNP fct " + fmt(fct, 2) + " ms <= 1.25 x ideal " + fmt(ideal, 2));
    const auto src_drops = s["long_haul_drops_source_exits"].get<std::uint64_t>();
    o.require(src_drops > 0, "no fast CNP source-exit drops " + std::to_string(src_drops) + " > 0");
    o.require(fct_slow < 0 || fct_slow >= 2.5 * fct,
              "no fast CNP fct " + (fct_slow < 0 ? std::string("unfinished") : fmt(fct_slow, 2) + " ms") +
                  " >= 2.5 x " + fmt(fct, 2));
    return o;
}

// --- C7: drain-protocol properties on randomized small scenarios -----------

struct PacketKey {
    net::FlowId flow;
    std::uint32_t index;
    sim::Time created;
    bool operator==(const PacketKey&) const = default;
};

PacketKey key_of(const net::Packet& p) { return {p.flow, p.index, p.created}; }

class DrainChecker : public spill::SpillwayTrace {
public:
    explicit DrainChecker(sim::Time deadline) : deadline_(deadline) {}

    void on_enqueue(net::NodeId sp, std::uint32_t key, const net::Packet& p, bool returning, sim::Time t) override {
        auto& q = queues_[{sp, key}];
        (returning ? q.head : q.fifo).push_back(key_of(p));
        if (returning) q.held = true;
        ++enqueued_;
        last_ = {sp, key, t, true};
        update_wait(q, t);
    }

    void on_overflow(net::NodeId sp, std::uint32_t key, const net::Packet&, sim::Time t) override {
        ++overflows_;
        last_ = {sp, key, t, true};
    }

    void on_reinject(net::NodeId sp, std::uint32_t key, const net::Packet& p, spill::ReinjectKind kind,
                     sim::Time t) override {
        auto& q = queues_[{sp, key}];
        ++reinjected_;
        auto& src = q.head.empty() ? q.fifo : q.head;
        if (src.empty()) {
            fail("reinjection from an empty queue");
        } else {
            if (!(src.front() == key_of(p))) fail("reinjection out of FIFO order");
            src.pop_front();
        }
        if (kind == spill::ReinjectKind::Probe) {
            q.held = false;
        } else if (q.held) {
            fail("burst sent between a returning packet and the next probe");
        }
        last_ = {sp, key, t, false};
        update_wait(q, t);
    }

    void on_state(net::NodeId sp, std::uint32_t key, spill::DrainState from, spill::DrainState to,
                  sim::Time t) override {
        auto& q = queues_[{sp, key}];
        if (q.state != from) fail("state callback disagrees with the tracked state");
        if (to == spill::DrainState::QuietWait) {
            // Only an arrival for this very queue may start a quiet wait.
            if (!(last_.arrival && last_.sp == sp && last_.key == key && last_.t == t))
                fail("quiet wait not caused by an arrival for the same queue");
        }
        if (to == spill::DrainState::ProbeOutstanding) ++probes_;
        q.state = to;
        last_.arrival = false;
        update_wait(q, t);
    }

    void finish(sim::Time end, std::size_t buffered_reported) {
        std::size_t buffered = 0;
        for (auto& [k, q] : queues_) {
            buffered += q.head.size() + q.fifo.size();
            if (q.wait_since >= 0) check_wait(end - q.wait_since);
        }
        if (buffered != buffered_reported) fail("buffered packet count differs from the node's");
        if (enqueued_ != reinjected_ + buffered) fail("spillway enqueue/reinject/buffered mismatch");
    }

    const std::vector<std::string>& errors() const { return errors_; }
    sim::Time max_wait() const { return max_wait_; }
    std::uint64_t probes() const { return probes_; }
    std::uint64_t overflows() const { return overflows_; }
    std::uint64_t reinjected() const { return reinjected_; }

private:
    struct Q {
        std::deque<PacketKey> head, fifo;
        spill::DrainState state = spill::DrainState::Accumulating;
        bool held = false;
        sim::Time wait_since = -1;
    };
    struct Last {
        net::NodeId sp = 0;
        std::uint32_t key = 0;
        sim::Time t = -1;
        bool arrival = false;
    };

    void update_wait(Q& q, sim::Time t) {
        const bool waiting = !(q.head.empty() && q.fifo.empty()) &&
                             (q.state == spill::DrainState::Accumulating || q.state == spill::DrainState::QuietWait);
        if (waiting && q.wait_since < 0) q.wait_since = t;
        if (!waiting && q.wait_since >= 0) {
            check_wait(t - q.wait_since);
            q.wait_since = -1;
        }
    }

    void check_wait(sim::Time w) {
        max_wait_ = std::max(max_wait_, w);
        if (w > deadline_) fail("non-empty queue waited " + std::to_string(w) + " ns without a probe");
    }

    void fail(const std::string& what) {
        if (errors_.size() < 5) errors_.push_back(what);
    }

    sim::Time deadline_;
    std::map<std::pair<net::NodeId, std::uint32_t>, Q> queues_;
    Last last_;
    std::uint64_t enqueued_ = 0, reinjected_ = 0, overflows_ = 0, probes_ = 0;
    sim::Time max_wait_ = 0;
    std::vector<std::string> errors_;
};

json micro_scenario(sim::Rng& rng, int i) {
    auto pick = [&](std::initializer_list<double> xs) { return *(xs.begin() + rng.uniform_index(xs.size())); };
    const double tau = pick({5, 10, 20, 30});
    json j = {
        {"seed", 1000 + i},
        {"t_end_ms", 60},
        {"sample_interval_us", 50},
        {"topology",
         {{"gpus_per_dc", 16},
          {"gpus_per_node", 4},
          {"leaves", 4},
          {"spines", 2},
          {"exits", 2},
          {"dci_latency_ms", pick({0.1, 0.2, 0.3})},
          {"switch_buffer_bytes", static_cast<std::uint64_t>(pick({500'000, 1'000'000, 2'000'000}))}}},
        {"traffic_class", {{"ecn_kmin_bytes", 20'000}, {"ecn_kmax_bytes", 80'000}}},
        {"spillway",
         {{"per_exit", static_cast<int>(pick({1, 2}))},
          {"policy", i % 3 == 0 ? "sw_anycast" : "dc_anycast"},
          {"sticky", rng.bernoulli(0.5)},
          {"tau_gap_us", tau},
          {"jitter_us", tau * pick({0, 0.25, 0.5, 1.0})},
          {"probe_wait_us", pick({5, 15})},
          {"half_burst_packets", static_cast<int>(pick({8, 32, 64}))},
          {"deadline_ms", pick({0.05, 0.2, 1.0})},
          {"queue_count", static_cast<int>(pick({0, 0, 1, 3}))},
          {"buffer_bytes", static_cast<std::uint64_t>(pick({300'000, 4'000'000, 1e9}))}}},
        {"workload",
         {{"long_haul_flows", static_cast<int>(pick({2, 4, 8}))},
          {"long_haul_bytes", static_cast<std::uint64_t>(pick({500'000, 1'000'000, 3'000'000}))},
          {"alltoall_bytes_per_node", static_cast<std::uint64_t>(pick({8e6, 24e6, 48e6}))},
          {"jitter_us", pick({0, 20, 100})}}}};
    return j;
}

Outcome c7() {
    Outcome o;
    const auto t0 = Clock::now();
    sim::Rng rng(777, 7);
    int bad = 0, complete = 0;
    std::uint64_t probes = 0, forced = 0, overflows = 0, reinjected = 0, returning = 0;
    std::string first_error;
    double worst_wait_frac = 0.0;
    for (int i = 0; i < 100; ++i) {
        const json scenario = micro_scenario(rng, i);
        const auto cfg = metrics::config_from_json(scenario);
        DrainChecker checker(cfg.spillway.params.deadline);
        metrics::RunOptions opts;
        opts.trace = &checker;
        opts.sample_buffers = false;
        metrics::RunReport r;
        try {
            r = metrics::run_scenario(cfg, opts);
        } catch (const std::exception& e) {
            ++bad;
            if (first_error.empty()) first_error = "scenario " + std::to_string(i) + ": " + e.what();
            std::cerr << "C7 scenario " << i << " config: " << scenario.dump() << '\n';
            continue;
        }
        checker.finish(r.end_time, r.spillways.packets_buffered);
        std::string err;
        if (!checker.errors().empty()) err = checker.errors().front();
        else if (!r.conservation.holds()) err = "packet conservation";
        else if (r.spillways.packets_in !=
                 r.spillways.packets_reinjected + r.spillways.packets_buffered + r.spillways.overflow_drops)
            err = "spillway counters do not add up";
        if (!err.empty()) {
            ++bad;
            if (first_error.empty()) first_error = "scenario " + std::to_string(i) + ": " + err;
            std::cerr << "C7 scenario " << i << " config: " << scenario.dump() << '\n';
        }
        complete += r.all_complete ? 1 : 0;
        probes += checker.probes();
        forced += r.spillways.forced_probes;
        overflows += checker.overflows();
        reinjected += checker.reinjected();
        returning += r.spillways.packets_returning;
        worst_wait_frac = std::max(worst_wait_frac, static_cast<double>(checker.max_wait()) /
                                                        static_cast<double>(cfg.spillway.params.deadline));
    }
    const double wall = seconds_since(t0);
    o.require(bad == 0, "violating scenarios " + std::to_string(bad) + "/100" +
                            (first_error.empty() ? "" : " (" + first_error + ")"));
    o.require(reinjected > 0 && returning > 0 && forced > 0 && overflows > 0,
              "exercised: reinjected " + std::to_string(reinjected) + ", returning " + std::to_string(returning) +
                  ", probes " + std::to_string(probes) + ", forced " + std::to_string(forced) + ", overflows " +
                  std::to_string(overflows));
    o.detail += "; longest wait " + fmt(worst_wait_frac, 3) + " x deadline; completed " + std::to_string(complete);
    o.require(wall < 120.0, "wall " + fmt(wall, 1) + " s < 120 s");
    return o;
}

// --- C8: reproducibility ---------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome c8() {
    Outcome o;
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "spillway_acceptance_c8";
    fs::remove_all(root);
    struct Case {
        std::string name;
        json cfg;
        std::vector<std::string> sets;
    };
    const std::vector<Case> cases = {{"motivation", base("MOTIVATION"), {"spillway.enabled=false"}},
                                     {"microbenchmark", base(""), {"spillway.policy=sw_anycast"}}};
    for (const auto& c : cases) {
        for (int k = 0; k < 2; ++k) {
            const auto r = run(c.cfg, c.sets);
            metrics::emit_outputs(r.report, (root / (c.name + std::to_string(k))).string());
        }
        std::size_t files = 0;
        bool same = true;
        for (const auto& e : fs::directory_iterator(root / (c.name + "0"))) {
            ++files;
            const auto other = root / (c.name + "1") / e.path().filename();
            if (!fs::exists(other) || slurp(e.path()) != slurp(other)) same = false;
        }
        o.require(same && files > 0, c.name + " " + std::to_string(files) + " files byte-identical");
    }
    fs::remove_all(root);
    return o;
}

Outcome c9() {
    Outcome o;
    for (const std::string name : {"dc", "sw", "dc_stateless", "sw_stateless"}) {
        const double u = metrics::peak_spillway_utilization(micro(name).report);
        o.require(u < 0.05, name + " peak spillway utilization " + fmt(u, 4) + " < 0.05");
    }
    for (const std::string pol : {"dc", "sw"}) {
        const double sticky = metrics::drain_half_time(micro(pol).report);
        const double stateless = metrics::drain_half_time(micro(pol + "_stateless").report);
        o.require(stateless >= 0 && sticky >= 0 && stateless <= sticky,
                  pol + " drain half-time stateless " + fmt(stateless * 1e3, 2) + " ms <= sticky " +
                      fmt(sticky * 1e3, 2) + " ms");
    }
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::pair<std::string, std::function<Outcome()>>>> all = {
        {"C1", {"worst-case FCT model matches the brute-force oracle", c1}},
        {"C2", {"motivation baseline loses most remote packets and slows the flow", c2}},
        {"C3", {"anycast spillways keep long-haul flows loss-free", c3}},
        {"C4", {"selection policy shapes deflection counts", c4}},
        {"C5", {"spine-stress: spillways beat neighbor deflection", c5}},
        {"C6", {"fast CNP under DCI contention", c6}},
        {"C7", {"drain protocol properties on randomized scenarios", c7}},
        {"C8", {"identical outputs across reruns", c8}},
        {"C9", {"spillway utilization and drain speed", c9}},
    };
    std::set<std::string> only(argv + 1, argv + argc);
    int failures = 0;
    for (const auto& [id, entry] : all) {
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = entry.second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS " : "FAIL ") << id << ": " << entry.first << " | " << o.detail << " | "
                  << fmt(seconds_since(t0), 1) << " s" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
