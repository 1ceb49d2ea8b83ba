#pragma once

#include <cstdint>
#include <deque>
#include <unordered_map>
#include <vector>

#include "spillway/net/network.hpp"
#include "spillway/sim/rng.hpp"

namespace spillway::spill {

using net::NodeId;
using net::PacketId;

enum class DrainState : std::uint8_t { Accumulating, QuietWait, ProbeOutstanding, HalfBurst, FullBurst };
const char* to_string(DrainState s);

struct SpillwayParams {
    std::uint64_t buffer_bytes = 16'000'000'000ULL;
    sim::Time tau_gap = 30 * sim::kMicrosecond;
    sim::Time jitter = 5 * sim::kMicrosecond;  // upper bound of the uniform quiet-interval jitter
    sim::Time deadline = 5 * sim::kMillisecond;
    sim::Time probe_wait = 15 * sim::kMicrosecond;
    int half_burst_packets = 64;
    int queue_count = 0;  // 0: one queue per destination; otherwise destinations hash into this many
};

/// How a packet left the spillway.
enum class ReinjectKind : std::uint8_t { Probe, HalfBurst, FullBurst };

/// Hooks for property checking; every callback is optional.
class SpillwayTrace {
public:
    virtual ~SpillwayTrace() = default;
    virtual void on_enqueue(NodeId /*spillway*/, std::uint32_t /*queue_key*/, const net::Packet&, bool /*returning*/,
                            sim::Time) {}
    virtual void on_reinject(NodeId, std::uint32_t, const net::Packet&, ReinjectKind, sim::Time) {}
    virtual void on_state(NodeId, std::uint32_t, DrainState /*from*/, DrainState /*to*/, sim::Time) {}
    virtual void on_overflow(NodeId, std::uint32_t, const net::Packet&, sim::Time) {}
};

struct SpillwayCounters {
    std::uint64_t packets_in = 0;
    std::uint64_t packets_returning = 0;
    std::uint64_t packets_reinjected = 0;
    std::uint64_t overflow_drops = 0;
    std::uint64_t probes = 0;
    std::uint64_t forced_probes = 0;
    std::uint64_t full_bursts = 0;
    std::uint64_t peak_occupancy = 0;
};

/// Buffer server hanging off an exit switch. Holds deflected packets in
/// per-destination FIFOs and drains each FIFO through the quiet/probe/burst cycle.
class SpillwayNode : public net::Node {
public:
    SpillwayNode(net::Network& net, NodeId id, const SpillwayParams& params, std::uint64_t seed);

    void receive(PacketId pkt, std::uint16_t in_port) override;
    PacketId pull(std::uint16_t port) override;
    void on_timer(std::uint32_t kind, std::uint32_t arg) override;
    std::uint64_t occupancy() const override { return occupancy_; }

    void set_trace(SpillwayTrace* trace) { trace_ = trace; }
    const SpillwayCounters& counters() const { return counters_; }
    const SpillwayParams& params() const { return params_; }
    int ordinal() const { return ordinal_; }

    std::uint32_t queue_key(NodeId orig_dst) const;
    /// State of the queue for `key`; Accumulating if the queue was never created.
    DrainState state_of(std::uint32_t key) const;
    std::size_t queue_length(std::uint32_t key) const;
    std::size_t buffered_packets() const;

private:
    enum TimerKind : std::uint32_t { kQuiet = 1, kVerdict = 2, kDeadline = 3, kPace = 4 };

    struct Queue {
        std::uint32_t key = 0;
        std::deque<PacketId> head;  // re-deflected packets, served before `fifo`
        std::deque<PacketId> fifo;
        DrainState state = DrainState::Accumulating;
        sim::Time last_arrival = 0;
        sim::Time quiet_at = -1;         // desired quiet expiry
        sim::Time quiet_event_at = -1;   // pending quiet event, if any
        sim::Time verdict_at = -1;
        sim::Time deadline_at = -1;
        sim::Time nonempty_since = -1;
        sim::Time next_tx = 0;           // half-burst pacing
        bool probe_pending = false;      // probe selected but not yet transmitted
        int half_remaining = 0;
        std::uint64_t bytes = 0;

        bool empty() const { return head.empty() && fifo.empty(); }
        std::size_t size() const { return head.size() + fifo.size(); }
    };

    Queue& queue_for(std::uint32_t key);
    void set_state(Queue& q, DrainState s);
    void arm_quiet(Queue& q, std::uint32_t index);
    void start_probe(Queue& q, bool forced);
    PacketId pop_front(Queue& q);
    bool eligible(const Queue& q, sim::Time now) const;
    void on_emptied(Queue& q);
    void after_send(Queue& q, std::uint32_t index, const net::Packet& p);

    SpillwayParams params_;
    sim::Rng rng_;
    int ordinal_;
    double port_bps_;
    std::vector<Queue> queues_;
    std::unordered_map<std::uint32_t, std::uint32_t> index_;
    std::size_t rr_ = 0;
    sim::Time pace_event_at_ = -1;
    std::uint64_t occupancy_ = 0;
    SpillwayCounters counters_;
    SpillwayTrace* trace_ = nullptr;
};

}  // namespace spillway::spill
