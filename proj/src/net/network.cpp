#include "spillway/net/network.hpp"

#include <cmath>

namespace spillway::net {

const char* to_string(DropReason r) {
    switch (r) {
        case DropReason::BufferOverflow: return "buffer_overflow";
        case DropReason::SpillwayPath: return "spillway_path";
        case DropReason::SpillwayOverflow: return "spillway_overflow";
        case DropReason::NeighborExhausted: return "neighbor_exhausted";
    }
    return "?";
}

Network::Network(sim::Engine& engine, const Topology& topo)
    : engine_(engine), topo_(topo), nodes_(topo.node_count()), ports_(topo.port_count()) {}

void Network::attach(std::unique_ptr<Node> node) {
    const NodeId id = node->id();
    nodes_.at(id) = std::move(node);
}

void Network::kick(NodeId n, std::uint16_t local) {
    const PortId gp = global_port(n, local);
    if (ports_[gp].busy) return;
    const PacketId pkt = nodes_[n]->pull(local);
    if (pkt == kNoPacket) return;
    start_tx(gp, pkt);
}

void Network::start_tx(PortId gp, PacketId pkt) {
    const PortInfo& info = topo_.port(gp);
    PortRuntime& rt = ports_[gp];
    Packet& p = pool_[pkt];
    const auto bytes = p.wire_bytes();
    // Integer-ns clock: carry sub-ns remainders so long-run rate is exact.
    const auto tx_ps = static_cast<std::uint64_t>(std::llround(static_cast<double>(bytes) * 8.0 * 1e12 / info.bps));
    const std::uint64_t total = rt.carry_ps + tx_ps;
    const auto ser = static_cast<sim::Time>(total / 1000);
    rt.carry_ps = total % 1000;
    rt.busy = true;
    rt.bytes_sent += bytes;
    ++p.hops;
    if (p.deflect_count > 0) ++p.deflected_hops;
    ++counters_.transmissions;
    if (observer_) observer_->on_transmit(p, info, engine_.now());
    const sim::Time done = engine_.now() + ser;
    engine_.schedule(done, this, kTxDone, gp);
    engine_.schedule(done + info.latency, this, kArrive, info.peer, pkt);
}

void Network::send_pfc(NodeId n, std::uint16_t local, bool pause) {
    const PortId gp = global_port(n, local);
    const PortInfo& info = topo_.port(gp);
    if (pause) ++counters_.pfc_pauses;
    engine_.schedule(engine_.now() + info.latency, this, kPfc, info.peer, pause ? 1 : 0);
}

sim::EventHandle Network::schedule_timer(sim::Time at, NodeId n, std::uint32_t kind, std::uint32_t arg) {
    return engine_.schedule(at, this, kTimer, n, (static_cast<std::uint64_t>(kind) << 32) | arg);
}

PacketId Network::new_packet() {
    const PacketId id = pool_.allocate();
    pool_[id].created = engine_.now();
    return id;
}

void Network::deliver(PacketId pkt, NodeId at) {
    ++counters_.delivered;
    if (observer_) observer_->on_delivered(pool_[pkt], at, engine_.now());
    pool_.release(pkt);
}

void Network::drop(PacketId pkt, DropReason reason, NodeId at) {
    ++counters_.dropped;
    ++counters_.drops_by_reason[static_cast<std::size_t>(reason)];
    if (observer_) observer_->on_dropped(pool_[pkt], reason, at, engine_.now());
    pool_.release(pkt);
}

void Network::notify_deflected(PacketId pkt, NodeId at) {
    if (observer_) observer_->on_deflected(pool_[pkt], at, engine_.now());
}

void Network::handle(const sim::Event& ev) {
    switch (ev.kind) {
        case kTxDone: {
            const PortId gp = ev.a;
            ports_[gp].busy = false;
            const PortInfo& info = topo_.port(gp);
            kick(info.owner, info.local);
            break;
        }
        case kArrive: {
            const PortInfo& info = topo_.port(ev.a);
            const auto pkt = static_cast<PacketId>(ev.b);
            pool_[pkt].in_port = info.local;
            nodes_[info.owner]->receive(pkt, info.local);
            break;
        }
        case kPfc: {
            const PortInfo& info = topo_.port(ev.a);
            const bool pause = ev.b != 0;
            ports_[ev.a].lossless_paused = pause;
            nodes_[info.owner]->on_pfc(info.local, pause);
            if (!pause) kick(info.owner, info.local);
            break;
        }
        case kTimer: {
            nodes_[ev.a]->on_timer(static_cast<std::uint32_t>(ev.b >> 32), static_cast<std::uint32_t>(ev.b));
            break;
        }
        default: break;
    }
}

}  // namespace spillway::net
