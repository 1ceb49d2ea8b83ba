#include "spillway/spillway/spillway_node.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spillway::spill {

using net::Packet;

const char* to_string(DrainState s) {
    switch (s) {
        case DrainState::Accumulating: return "ACCUMULATING";
        case DrainState::QuietWait: return "QUIET_WAIT";
        case DrainState::ProbeOutstanding: return "PROBE_OUTSTANDING";
        case DrainState::HalfBurst: return "HALF_BURST";
        case DrainState::FullBurst: return "FULL_BURST";
    }
    return "?";
}

SpillwayNode::SpillwayNode(net::Network& net, NodeId id, const SpillwayParams& params, std::uint64_t seed)
    : Node(net, id),
      params_(params),
      rng_(seed, 0x5b11'0000ULL + id),
      ordinal_(net.topology().spillway_ordinal(id)),
      port_bps_(net.topology().port(net.topology().node(id).ports.at(0)).bps) {}

std::uint32_t SpillwayNode::queue_key(NodeId orig_dst) const {
    if (params_.queue_count <= 0) return orig_dst;
    return static_cast<std::uint32_t>(sim::mix64(orig_dst) % static_cast<std::uint64_t>(params_.queue_count));
}

DrainState SpillwayNode::state_of(std::uint32_t key) const {
    auto it = index_.find(key);
    return it == index_.end() ? DrainState::Accumulating : queues_[it->second].state;
}

std::size_t SpillwayNode::queue_length(std::uint32_t key) const {
    auto it = index_.find(key);
    return it == index_.end() ? 0 : queues_[it->second].size();
}

std::size_t SpillwayNode::buffered_packets() const {
    std::size_t n = 0;
    for (const auto& q : queues_) n += q.size();
    return n;
}

SpillwayNode::Queue& SpillwayNode::queue_for(std::uint32_t key) {
    auto [it, fresh] = index_.try_emplace(key, static_cast<std::uint32_t>(queues_.size()));
    if (fresh) {
        queues_.emplace_back();
        queues_.back().key = key;
    }
    return queues_[it->second];
}

void SpillwayNode::set_state(Queue& q, DrainState s) {
    if (q.state == s) return;
    const DrainState from = q.state;
    q.state = s;
    if (trace_) trace_->on_state(id_, q.key, from, s, net_.now());
}

void SpillwayNode::arm_quiet(Queue& q, std::uint32_t index) {
    const sim::Time now = net_.now();
    const sim::Time jitter =
        params_.jitter > 0 ? static_cast<sim::Time>(rng_.uniform_index(static_cast<std::uint64_t>(params_.jitter))) : 0;
    q.quiet_at = now + params_.tau_gap + jitter;
    // One pending event at a time; an earlier target needs its own event.
    if (q.quiet_event_at < 0 || q.quiet_event_at > q.quiet_at) {
        q.quiet_event_at = q.quiet_at;
        net_.schedule_timer(q.quiet_at, id_, kQuiet, index);
    }
}

void SpillwayNode::receive(PacketId pkt, std::uint16_t /*in_port*/) {
    Packet& p = net_.packets()[pkt];
    if (p.cls != net::TrafficClass::Deflected) {
        throw std::logic_error("spillway " + std::to_string(id_) + " received a non-deflected packet");
    }
    const sim::Time now = net_.now();
    p.encap.reset();
    const std::uint32_t key = queue_key(p.orig_dst);
    const bool returning = p.spillway_id_field >= 0;
    const std::uint32_t index = static_cast<std::uint32_t>(&queue_for(key) - queues_.data());
    Queue& q = queues_[index];
    ++counters_.packets_in;
    if (returning) ++counters_.packets_returning;

    const auto bytes = p.wire_bytes();
    const bool overflow = occupancy_ + bytes > params_.buffer_bytes;
    if (overflow) {
        ++counters_.overflow_drops;
        if (trace_) trace_->on_overflow(id_, key, p, now);
        net_.drop(pkt, net::DropReason::SpillwayOverflow, id_);
    } else {
        if (q.empty()) {
            q.nonempty_since = now;
            q.deadline_at = now + params_.deadline;
            net_.schedule_timer(q.deadline_at, id_, kDeadline, index);
        }
        (returning ? q.head : q.fifo).push_back(pkt);
        q.bytes += bytes;
        occupancy_ += bytes;
        counters_.peak_occupancy = std::max(counters_.peak_occupancy, occupancy_);
        if (trace_) trace_->on_enqueue(id_, key, net_.packets()[pkt], returning, now);
    }

    // Any arrival for the destination is evidence it is still congested.
    q.last_arrival = now;
    q.probe_pending = false;
    q.half_remaining = 0;
    q.verdict_at = -1;
    if (q.empty()) {
        set_state(q, DrainState::Accumulating);
        return;
    }
    set_state(q, DrainState::QuietWait);
    arm_quiet(q, index);
}

void SpillwayNode::start_probe(Queue& q, bool forced) {
    if (q.empty()) {
        set_state(q, DrainState::Accumulating);
        return;
    }
    q.probe_pending = true;
    q.half_remaining = 0;
    ++counters_.probes;
    if (forced) ++counters_.forced_probes;
    set_state(q, DrainState::ProbeOutstanding);
    net_.kick(id_, 0);
}

void SpillwayNode::on_timer(std::uint32_t kind, std::uint32_t arg) {
    const sim::Time now = net_.now();
    if (kind == kPace) {
        if (now == pace_event_at_) pace_event_at_ = -1;
        net_.kick(id_, 0);
        return;
    }
    Queue& q = queues_.at(arg);
    switch (kind) {
        case kQuiet:
            if (now != q.quiet_event_at) return;
            q.quiet_event_at = -1;
            if (q.state != DrainState::QuietWait) return;
            if (now < q.quiet_at) {
                q.quiet_event_at = q.quiet_at;
                net_.schedule_timer(q.quiet_at, id_, kQuiet, arg);
                return;
            }
            start_probe(q, false);
            return;
        case kVerdict:
            if (now != q.verdict_at) return;
            q.verdict_at = -1;
            if (q.state == DrainState::ProbeOutstanding && !q.probe_pending) {
                q.half_remaining = static_cast<int>(std::min<std::size_t>(q.size(), params_.half_burst_packets));
                q.next_tx = now;
                set_state(q, q.half_remaining > 0 ? DrainState::HalfBurst : DrainState::Accumulating);
            } else if (q.state == DrainState::HalfBurst && q.half_remaining == 0) {
                ++counters_.full_bursts;
                set_state(q, DrainState::FullBurst);
            }
            net_.kick(id_, 0);
            return;
        case kDeadline:
            if (now != q.deadline_at || q.empty()) return;
            if (q.state == DrainState::Accumulating || q.state == DrainState::QuietWait) start_probe(q, true);
            q.nonempty_since = now;
            q.deadline_at = now + params_.deadline;
            net_.schedule_timer(q.deadline_at, id_, kDeadline, arg);
            return;
        default: return;
    }
}

bool SpillwayNode::eligible(const Queue& q, sim::Time now) const {
    switch (q.state) {
        case DrainState::ProbeOutstanding: return q.probe_pending && !q.empty();
        case DrainState::HalfBurst: return q.half_remaining > 0 && now >= q.next_tx && !q.empty();
        case DrainState::FullBurst: return !q.empty();
        default: return false;
    }
}

PacketId SpillwayNode::pop_front(Queue& q) {
    auto& src = q.head.empty() ? q.fifo : q.head;
    const PacketId pkt = src.front();
    src.pop_front();
    const auto bytes = net_.packets()[pkt].wire_bytes();
    q.bytes -= bytes;
    occupancy_ -= bytes;
    return pkt;
}

void SpillwayNode::on_emptied(Queue& q) {
    q.deadline_at = -1;
    q.nonempty_since = -1;
    q.verdict_at = -1;
    q.probe_pending = false;
    q.half_remaining = 0;
    set_state(q, DrainState::Accumulating);
}

void SpillwayNode::after_send(Queue& q, std::uint32_t index, const Packet& p) {
    const sim::Time now = net_.now();
    ReinjectKind kind = ReinjectKind::FullBurst;
    if (q.state == DrainState::ProbeOutstanding) {
        kind = ReinjectKind::Probe;
        q.probe_pending = false;
        q.verdict_at = now + params_.probe_wait;
        net_.schedule_timer(q.verdict_at, id_, kVerdict, index);
    } else if (q.state == DrainState::HalfBurst) {
        kind = ReinjectKind::HalfBurst;
        --q.half_remaining;
        const auto ser = static_cast<sim::Time>(std::llround(net::serialization_ns(p.wire_bytes(), port_bps_)));
        q.next_tx = now + 2 * ser;
        if (q.half_remaining == 0) {
            q.verdict_at = now + params_.probe_wait;
            net_.schedule_timer(q.verdict_at, id_, kVerdict, index);
        }
    }
    ++counters_.packets_reinjected;
    if (trace_) trace_->on_reinject(id_, q.key, p, kind, now);
    if (q.empty()) on_emptied(q);
}

PacketId SpillwayNode::pull(std::uint16_t /*port*/) {
    const sim::Time now = net_.now();
    const std::size_t n = queues_.size();
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t i = (rr_ + step) % n;
        Queue& q = queues_[i];
        if (!eligible(q, now)) continue;
        const PacketId pkt = pop_front(q);
        Packet& p = net_.packets()[pkt];
        p.cls = net::TrafficClass::Drained;
        p.priority = net::priority_of(p.cls);
        p.spillway_id_field = ordinal_;
        p.probe = q.state == DrainState::ProbeOutstanding;
        rr_ = (i + 1) % n;
        after_send(q, static_cast<std::uint32_t>(i), p);
        return pkt;
    }
    // Nothing ready; wake up when the earliest paced half-burst may send.
    sim::Time wake = -1;
    for (const auto& q : queues_) {
        if (q.state == DrainState::HalfBurst && q.half_remaining > 0 && !q.empty() && q.next_tx > now) {
            if (wake < 0 || q.next_tx < wake) wake = q.next_tx;
        }
    }
    if (wake >= 0 && (pace_event_at_ < now || pace_event_at_ > wake)) {
        pace_event_at_ = wake;
        net_.schedule_timer(wake, id_, kPace, 0);
    }
    return net::kNoPacket;
}

}  // namespace spillway::spill
