#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <set>
#include <vector>

#include "doctest.h"
#include "spillway/net/network.hpp"
#include "spillway/transport/dcqcn.hpp"
#include "spillway/transport/host.hpp"
#include "support/harness.hpp"

using namespace spillway;
using namespace spillway::net;
using namespace spillway::transport;

namespace {

// Leaf stand-in: forwards by route with per-port FIFOs and drops chosen data
// packets (flow, index) the first `times` times they pass.
class LossyWire : public Node {
public:
    using Node::Node;
    std::map<std::pair<FlowId, std::uint32_t>, int> drop_plan;
    int dropped = 0;

    void receive(PacketId pkt, std::uint16_t) override {
        const Packet& p = net_.packets()[pkt];
        if (p.is_data()) {
            auto it = drop_plan.find({p.flow, p.index});
            if (it != drop_plan.end() && it->second > 0) {
                --it->second;
                ++dropped;
                net_.drop(pkt, DropReason::BufferOverflow, id_);
                return;
            }
        }
        sim::Rng rng(1, 1);
        const auto port = next_hop(net_.topology(), id_, route_address(p), rng);
        q_[port].push_back(pkt);
        net_.kick(id_, port);
    }
    PacketId pull(std::uint16_t port) override {
        auto& q = q_[port];
        if (q.empty()) return kNoPacket;
        const PacketId p = q.front();
        q.pop_front();
        return p;
    }

private:
    std::map<std::uint16_t, std::deque<PacketId>> q_;
};

struct Pair {
    Topology topo;
    sim::Engine engine;
    Network net;
    FlowTable flows;
    NodeId a, b, leaf;

    Pair(std::vector<FlowSpec> specs, const TransportParams& tp, TopologyConfig tc = small())
        : topo(build_topology(tc)), net(engine, topo), flows(std::move(specs), tp.mtu) {
        a = topo.gpu(0, 0);
        b = topo.gpu(0, 1);
        leaf = topo.leaf(0, 0);
        net.attach(std::make_unique<HostNode>(net, a, tp, flows));
        net.attach(std::make_unique<HostNode>(net, b, tp, flows));
        net.attach(std::make_unique<LossyWire>(net, leaf));
        spillway::testing::fill_with_recorders(net);
        for (const auto& r : flows.records()) {
            net.node_as<HostNode>(r.spec.src).add_sender(r.spec.id);
            if (r.spec.dst == a || r.spec.dst == b) net.node_as<HostNode>(r.spec.dst).add_receiver(r.spec.id);
        }
    }
    static TopologyConfig small() {
        TopologyConfig c;
        c.gpus_per_dc = 8;
        c.leaves = 1;
        c.spines = 1;
        c.exits = 1;
        return c;
    }
    LossyWire& wire() { return net.node_as<LossyWire>(leaf); }
};

FlowSpec spec(FlowId id, NodeId src, NodeId dst, std::uint64_t size, TrafficClass cls) {
    FlowSpec f;
    f.id = id;
    f.src = src;
    f.dst = dst;
    f.size = size;
    f.cls = cls;
    return f;
}

TransportParams fast_rto() {
    TransportParams tp;
    tp.rto = 100 * sim::kMicrosecond;
    tp.ack_every = 1;
    return tp;
}

}  // namespace

TEST_SUITE("transport") {
    TEST_CASE("cnp at alpha one halves the rate") {
        DcqcnParams p;
        auto s = DcqcnState::at_line_rate(p);
        REQUIRE(s.alpha == 1.0);
        dcqcn_on_cnp(s, p);
        CHECK(s.current == doctest::Approx(200e9));
        CHECK(s.target == doctest::Approx(400e9));
        CHECK(s.alpha == doctest::Approx(1.0));
    }

    TEST_CASE("alpha decays geometrically without congestion") {
        DcqcnParams p;
        auto s = DcqcnState::at_line_rate(p);
        double expect = 1.0;
        for (int i = 0; i < 1000; ++i) {
            dcqcn_alpha_tick(s, p);
            expect *= 1.0 - p.g;
            CHECK(s.alpha == doctest::Approx(expect));
        }
        CHECK(s.alpha < 0.02);
        // A CNP in the window suppresses the next decay.
        dcqcn_on_cnp(s, p);
        const double after_cnp = s.alpha;
        dcqcn_alpha_tick(s, p);
        CHECK(s.alpha == after_cnp);
    }

    TEST_CASE("fast recovery halves the gap to the target each stage") {
        DcqcnParams p;
        auto s = DcqcnState::at_line_rate(p);
        dcqcn_on_cnp(s, p);
        double gap = s.target - s.current;
        for (int i = 0; i < p.fast_recovery_stages; ++i) {
            dcqcn_increase(s, p, true);
            gap /= 2;
            CHECK(s.target == doctest::Approx(400e9));
            CHECK(s.target - s.current == doctest::Approx(gap));
        }
        // Five averaging steps leave 1/32 of the original cut.
        CHECK(s.current == doctest::Approx(400e9 - 200e9 / 32));
        CHECK(s.current / s.target > 0.98);
    }

    TEST_CASE("additive increase raises the target by R_ai per period") {
        DcqcnParams p;
        DcqcnState s;
        s.current = s.target = 100e9;
        s.timer_stages = p.fast_recovery_stages;
        for (int i = 1; i <= 4; ++i) {
            dcqcn_increase(s, p, true);
            CHECK(s.target == doctest::Approx(100e9 + i * p.r_ai));
        }
    }

    TEST_CASE("hyper increase once both counters pass fast recovery") {
        DcqcnParams p;
        DcqcnState s;
        s.current = s.target = 100e9;
        s.timer_stages = p.fast_recovery_stages;
        s.byte_stages = p.fast_recovery_stages;
        dcqcn_increase(s, p, false);
        CHECK(s.target == doctest::Approx(100e9 + p.r_hai));
    }

    TEST_CASE("rate never exceeds line rate or drops below the floor") {
        DcqcnParams p;
        auto s = DcqcnState::at_line_rate(p);
        for (int i = 0; i < 200; ++i) dcqcn_on_cnp(s, p);
        CHECK(s.current == p.rate_min);
        for (int i = 0; i < 2000; ++i) dcqcn_increase(s, p, i % 2 == 0);
        CHECK(s.current <= p.line_rate);
        CHECK(s.target == p.line_rate);
    }

    TEST_CASE("byte counter triggers an increase every byte_counter bytes") {
        DcqcnParams p;
        p.byte_counter = 10'000;
        DcqcnState s;
        s.current = s.target = 100e9;
        int fired = 0;
        for (int i = 0; i < 100; ++i) fired += dcqcn_on_bytes(s, p, 1000);
        CHECK(fired == 10);
        CHECK(s.byte_stages == 10);
    }

    TEST_CASE("paced sender at 400 Gb/s spaces 4096 B packets by 81.92 ns") {
        TransportParams tp;
        const Topology topo = build_topology(Pair::small());
        // The cross-DC receiver has no host; the spine recorder sees the paced stream.
        Pair p2({spec(0, topo.gpu(0, 0), topo.gpu(1, 0), 4096ULL * 101, TrafficClass::LossyCrossDc)}, tp);
        p2.engine.run_until(sim::kMillisecond);
        std::vector<sim::Time> t;
        for (NodeId n = 0; n < p2.topo.node_count(); ++n) {
            if (p2.topo.node(n).kind != NodeKind::Spine || p2.topo.node(n).dc != 0) continue;
            t = p2.net.node_as<spillway::testing::Recorder>(n).times;
        }
        REQUIRE(t.size() == 101);
        const double mean_gap = static_cast<double>(t.back() - t.front()) / 100.0;
        CHECK(mean_gap == doctest::Approx(81.92).epsilon(0.001));
        // Two integer-clock serialization stages each round by under 1 ns.
        for (std::size_t i = 1; i < t.size(); ++i) {
            CHECK(t[i] - t[i - 1] >= 80);
            CHECK(t[i] - t[i - 1] <= 84);
        }
    }

    TEST_CASE("loss-free flow completes once with FCT at least its transmission time") {
        const auto tp = fast_rto();
        Pair pr({}, tp);
        Pair p({spec(0, pr.a, pr.b, 1'000'000, TrafficClass::LossyCrossDc)}, tp);
        bool all_done = false;
        p.flows.on_all_complete([&] { all_done = true; });
        p.engine.run_until(10 * sim::kMillisecond);
        const auto& r = p.flows[0];
        CHECK(all_done);
        REQUIRE(r.complete());
        CHECK(r.rx_complete <= r.completion);
        CHECK(r.fct_seconds() >= 1'000'000 * 8 / 400e9);
        CHECK(r.packets_retransmitted == 0);
        CHECK(r.rto_expirations == 0);
        CHECK(r.bytes_delivered == 1'000'000);
        CHECK(r.packets_total == 245);  // ceil(1e6 / 4096)
    }

    TEST_CASE("a lost packet is recovered by one RTO") {
        const auto tp = fast_rto();
        Pair base({}, tp);
        Pair clean({spec(0, base.a, base.b, 409'600, TrafficClass::LossyCrossDc)}, tp);
        clean.engine.run_until(10 * sim::kMillisecond);
        Pair lossy({spec(0, base.a, base.b, 409'600, TrafficClass::LossyCrossDc)}, tp);
        lossy.wire().drop_plan[{0, 99}] = 1;
        lossy.engine.run_until(10 * sim::kMillisecond);
        const auto& r = lossy.flows[0];
        REQUIRE(r.complete());
        CHECK(lossy.wire().dropped == 1);
        CHECK(r.rto_expirations == 1);
        CHECK(r.packets_retransmitted == 1);
        CHECK(r.bytes_retransmitted == 4096);
        // The last packet is resent one RTO after its first send.
        const auto extra = r.completion - clean.flows[0].completion;
        CHECK(extra >= tp.rto - 100);
        CHECK(extra <= tp.rto + 100);
    }

    TEST_CASE("each repeated loss adds about one RTO") {
        const auto tp = fast_rto();
        Pair base({}, tp);
        std::vector<sim::Time> fct;
        for (int losses = 0; losses < 4; ++losses) {
            Pair p({spec(0, base.a, base.b, 409'600, TrafficClass::LossyCrossDc)}, tp);
            if (losses > 0) p.wire().drop_plan[{0, 99}] = losses;
            p.engine.run_until(10 * sim::kMillisecond);
            REQUIRE(p.flows[0].complete());
            CHECK(p.flows[0].rto_expirations == static_cast<std::uint64_t>(losses));
            fct.push_back(p.flows[0].completion);
        }
        for (int i = 1; i < 4; ++i) {
            const auto step = fct[i] - fct[i - 1];
            CHECK(step >= tp.rto - 100);
            CHECK(step <= tp.rto + 2 * sim::kMicrosecond);
        }
    }

    TEST_CASE("many losses are all retransmitted and the flow completes exactly once") {
        const auto tp = fast_rto();
        Pair base({}, tp);
        Pair p({spec(0, base.a, base.b, 4096 * 200, TrafficClass::LossyCrossDc)}, tp);
        for (std::uint32_t i = 0; i < 200; i += 3) p.wire().drop_plan[{0, i}] = 1;
        int completions = 0;
        p.flows.on_all_complete([&] { ++completions; });
        p.engine.run_until(10 * sim::kMillisecond);
        const auto& r = p.flows[0];
        REQUIRE(r.complete());
        CHECK(completions == 1);
        CHECK(r.packets_retransmitted == 67);
        CHECK(r.packets_sent == 267);
        CHECK(p.flows.finite_completed() == 1);
    }

    TEST_CASE("lossless flow stays within its window and completes") {
        TransportParams tp;
        Pair base({}, tp);
        Pair p({spec(0, base.a, base.b, 4'000'000, TrafficClass::LosslessLocal)}, tp);
        p.engine.run_until(10 * sim::kMillisecond);
        REQUIRE(p.flows[0].complete());
        CHECK(p.flows[0].packets_retransmitted == 0);
    }

    TEST_CASE("ack for an unknown flow is a logic error") {
        TransportParams tp;
        Pair base({}, tp);
        Pair p({spec(0, base.a, base.b, 4096, TrafficClass::LossyCrossDc)}, tp);
        auto& host = p.net.node_as<HostNode>(p.b);
        const auto id = spillway::testing::data_packet(p.net, 0, p.a, p.b, TrafficClass::Ack, 64);
        CHECK_THROWS_AS(host.receive(id, 0), std::logic_error);
    }

    TEST_CASE("flow table rejects sparse ids") {
        CHECK_THROWS_AS(FlowTable({spec(1, 0, 1, 10, TrafficClass::LossyCrossDc)}, 4096), std::invalid_argument);
    }
}
