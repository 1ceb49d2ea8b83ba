#include "spillway/switch/switch_node.hpp"

#include <algorithm>

namespace spillway::sw {

using net::Packet;
using net::SchedClass;
using net::TrafficClass;

double ecn_probability(std::uint64_t q, const SwitchParams& p) {
    if (q <= p.ecn_kmin) return 0.0;
    if (q >= p.ecn_kmax) return p.ecn_pmax;
    const double frac = static_cast<double>(q - p.ecn_kmin) / static_cast<double>(p.ecn_kmax - p.ecn_kmin);
    return frac * p.ecn_pmax;
}

bool dt_admit(std::uint64_t queue_bytes, std::uint64_t occupancy, std::uint32_t bytes, std::uint64_t buffer_bytes,
              double alpha) {
    if (occupancy + bytes > buffer_bytes) return false;
    const double free_bytes = static_cast<double>(buffer_bytes - occupancy);
    return static_cast<double>(queue_bytes + bytes) <= alpha * free_bytes;
}

net::SpillwayTarget select_spillway(const net::Topology& topo, int dc, const Packet& pkt, const SelectPolicy& policy,
                                    sim::Rng& rng) {
    const auto& members = topo.spillways_of_dc(dc);
    if (members.empty()) throw net::ConfigError("spillway selection with no spillways in DC " + std::to_string(dc));
    using Kind = net::SpillwayTarget::Kind;
    if (policy.sticky && pkt.spillway_id_field >= 0) {
        return {Kind::Unicast, topo.spillway_by_ordinal(pkt.spillway_id_field)};
    }
    switch (policy.mode) {
        case SelectMode::DcAnycast:
            return {Kind::Unicast, members[rng.uniform_index(members.size())]};
        case SelectMode::SwAnycast:
            // Routed as anycast: sprayed to some exit, which then sprays over its own spillways.
            return {Kind::Anycast, topo.dc_anycast_address(dc)};
        case SelectMode::UnicastHash:
            return {Kind::Unicast, members[sim::mix64(pkt.flow) % members.size()]};
    }
    return {Kind::Anycast, topo.dc_anycast_address(dc)};
}

SwitchNode::SwitchNode(net::Network& net, NodeId id, const SwitchParams& params, std::uint64_t seed)
    : Node(net, id),
      params_(params),
      info_(net.topology().node(id)),
      rng_(seed, 0x5717'0000ULL + id),
      ports_(info_.ports.size()) {}

std::uint64_t SwitchNode::queued_bytes_total() const {
    std::uint64_t total = 0;
    for (const auto& pq : ports_)
        for (auto b : pq.bytes) total += b;
    return total;
}

bool SwitchNode::admit(PacketId pkt, std::uint16_t port) const {
    const Packet& p = net_.packets()[pkt];
    const auto c = static_cast<std::size_t>(net::sched_class(p.cls));
    const double alpha = p.cls == TrafficClass::Drained ? params_.dt_alpha_drained : params_.dt_alpha;
    return dt_admit(ports_[port].bytes[c], occupancy_, p.wire_bytes(), params_.buffer_bytes, alpha);
}

void SwitchNode::enqueue(PacketId pkt, std::uint16_t port) {
    Packet& p = net_.packets()[pkt];
    const auto c = static_cast<std::size_t>(net::sched_class(p.cls));
    const auto bytes = p.wire_bytes();
    auto& pq = ports_[port];
    pq.q[c].push_back(pkt);
    pq.bytes[c] += bytes;
    occupancy_ += bytes;
    counters_.peak_occupancy = std::max(counters_.peak_occupancy, occupancy_);
    ++counters_.enqueued;
    net_.kick(id_, port);
}

void SwitchNode::forward_control(PacketId pkt) {
    const Packet& p = net_.packets()[pkt];
    enqueue(pkt, net::next_hop(net_.topology(), id_, net::route_address(p), rng_));
}

bool SwitchNode::deflect_eligible(const Packet& p) const {
    if (p.src_dc == info_.dc) return false;
    return p.cls == TrafficClass::LossyCrossDc || p.cls == TrafficClass::Drained;
}

void SwitchNode::receive(PacketId pkt, std::uint16_t in_port) {
    Packet& p = net_.packets()[pkt];
    if (net::is_control(p.cls)) {
        forward_control(pkt);
        return;
    }
    const std::uint16_t port = net::next_hop(net_.topology(), id_, net::route_address(p), rng_);
    switch (p.cls) {
        case TrafficClass::LosslessLocal: {
            // PFC keeps the class lossless; admission never refuses it.
            auto& ing = ports_[in_port];
            ing.lossless_in += p.wire_bytes();
            enqueue(pkt, port);
            if (!ing.pausing_upstream && ing.lossless_in >= params_.pfc_xoff) {
                ing.pausing_upstream = true;
                ++counters_.pauses_sent;
                net_.send_pfc(id_, in_port, true);
            }
            return;
        }
        case TrafficClass::Deflected:
            if (admit(pkt, port)) {
                enqueue(pkt, port);
            } else {
                ++counters_.dropped;
                net_.drop(pkt, net::DropReason::SpillwayPath, id_);
            }
            return;
        default:
            handle_lossy(pkt, in_port, port);
            return;
    }
}

void SwitchNode::handle_lossy(PacketId pkt, std::uint16_t in_port, std::uint16_t port) {
    Packet& p = net_.packets()[pkt];
    if (admit(pkt, port)) {
        maybe_mark(p, port);
        maybe_fast_cnp(pkt, port);
        enqueue(pkt, port);
        return;
    }
    if (deflect_eligible(p)) {
        if (params_.deflect == DeflectPolicy::Spillway) {
            deflect_to_spillway(pkt);
            return;
        }
        if (params_.deflect == DeflectPolicy::NeighborDeflect) {
            neighbor_deflect(pkt, in_port, port);
            return;
        }
    }
    ++counters_.dropped;
    net_.drop(pkt, net::DropReason::BufferOverflow, id_);
}

void SwitchNode::deflect_to_spillway(PacketId pkt) {
    Packet& p = net_.packets()[pkt];
    p.cls = TrafficClass::Deflected;
    p.priority = net::priority_of(p.cls);
    ++p.deflect_count;
    p.encap = net::Encap{select_spillway(net_.topology(), info_.dc, p, params_.select, rng_), params_.encap_bytes};
    ++counters_.deflected;
    net_.notify_deflected(pkt, id_);
    const std::uint16_t port = net::next_hop(net_.topology(), id_, net::route_address(p), rng_);
    if (admit(pkt, port)) {
        enqueue(pkt, port);
    } else {
        ++counters_.dropped;
        net_.drop(pkt, net::DropReason::SpillwayPath, id_);
    }
}

void SwitchNode::neighbor_deflect(PacketId pkt, std::uint16_t in_port, std::uint16_t egress) {
    const auto& topo = net_.topology();
    std::vector<std::uint16_t> candidates;
    for (std::uint16_t local = 0; local < info_.ports.size(); ++local) {
        if (local == egress || local == in_port) continue;
        if (topo.port(info_.ports[local]).kind != net::PortKind::Fabric) continue;
        if (admit(pkt, local)) candidates.push_back(local);
    }
    if (candidates.empty()) {
        ++counters_.dropped;
        net_.drop(pkt, net::DropReason::NeighborExhausted, id_);
        return;
    }
    Packet& p = net_.packets()[pkt];
    ++p.deflect_count;
    ++counters_.neighbor_deflected;
    net_.notify_deflected(pkt, id_);
    const auto port = candidates[rng_.uniform_index(candidates.size())];
    maybe_mark(p, port);
    enqueue(pkt, port);
}

void SwitchNode::maybe_mark(Packet& p, std::uint16_t port) {
    if (p.ecn != net::Ecn::Ect) return;
    if (p.cls != TrafficClass::LossyCrossDc && p.cls != TrafficClass::Drained) return;
    const auto c = static_cast<std::size_t>(net::sched_class(p.cls));
    const double prob = ecn_probability(ports_[port].bytes[c], params_);
    if (prob > 0.0 && rng_.bernoulli(prob)) {
        p.ecn = net::Ecn::Ce;
        ++counters_.ecn_marked;
    }
}

void SwitchNode::maybe_fast_cnp(PacketId pkt, std::uint16_t port) {
    Packet& p = net_.packets()[pkt];
    if (!params_.fast_cnp || info_.kind != net::NodeKind::Exit) return;
    if (p.cls != TrafficClass::LossyCrossDc || p.ecn != net::Ecn::Ce || p.src_dc != info_.dc) return;
    if (net_.topology().port(info_.ports[port]).kind != net::PortKind::Dci) return;
    p.ecn = net::Ecn::Ect;
    const sim::Time now = net_.now();
    auto [it, fresh] = last_cnp_.try_emplace(p.flow, now);
    if (!fresh) {
        if (now - it->second < params_.cnp_interval) return;
        it->second = now;
    }
    const net::FlowId flow = p.flow;
    const NodeId sender = p.src;
    const NodeId receiver = p.dst;
    const auto src_dc = p.src_dc;
    // new_packet() may grow the pool, so `p` is not used past this point.
    const PacketId cnp = net_.new_packet();
    Packet& c = net_.packets()[cnp];
    c.flow = flow;
    c.cls = TrafficClass::Cnp;
    c.priority = net::priority_of(c.cls);
    c.size = params_.control_bytes;
    c.src = receiver;
    c.dst = sender;
    c.orig_dst = sender;
    c.src_dc = src_dc;
    ++counters_.fast_cnps;
    forward_control(cnp);
}

PacketId SwitchNode::pull(std::uint16_t port) {
    auto& pq = ports_[port];
    const bool paused = net_.port_state(id_, port).lossless_paused;
    for (std::size_t c = 0; c < net::kNumSchedClasses; ++c) {
        if (pq.q[c].empty()) continue;
        if (c == static_cast<std::size_t>(SchedClass::Lossless) && paused) continue;
        const PacketId pkt = pq.q[c].front();
        pq.q[c].pop_front();
        const Packet& p = net_.packets()[pkt];
        const auto bytes = p.wire_bytes();
        pq.bytes[c] -= bytes;
        occupancy_ -= bytes;
        if (c == static_cast<std::size_t>(SchedClass::Lossless)) {
            auto& ing = ports_[p.in_port];
            ing.lossless_in -= bytes;
            if (ing.pausing_upstream && ing.lossless_in <= params_.pfc_xon) {
                ing.pausing_upstream = false;
                net_.send_pfc(id_, p.in_port, false);
            }
        }
        return pkt;
    }
    return net::kNoPacket;
}

}  // namespace spillway::sw
