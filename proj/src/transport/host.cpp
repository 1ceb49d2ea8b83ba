#include "spillway/transport/host.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spillway::transport {

using net::Packet;
using net::TrafficClass;

HostNode::HostNode(net::Network& net, net::NodeId id, const TransportParams& params, FlowTable& flows)
    : Node(net, id), params_(params), flows_(flows), dc_(net.topology().node(id).dc) {}

void HostNode::add_sender(FlowId flow) {
    const auto& rec = flows_[flow];
    if (rec.spec.src != id_) throw std::invalid_argument("flow source does not match host");
    Sender s;
    s.flow = flow;
    s.n = rec.packets_total;
    s.lossless = rec.spec.cls == TrafficClass::LosslessLocal;
    s.udp = rec.spec.cls == TrafficClass::BackgroundUdp;
    s.paced = !s.lossless;
    if (s.udp && rec.spec.finite()) throw std::invalid_argument("background flows must be unbounded");
    if (!s.udp && !rec.spec.finite()) throw std::invalid_argument("only background flows may be unbounded");
    if (!s.udp) s.acked.assign(s.n, 0);
    if (s.paced && !s.udp) s.last_send.assign(s.n, -1);
    s.cc = DcqcnState::at_line_rate(params_.dcqcn);
    const auto index = static_cast<std::uint32_t>(senders_.size());
    senders_.push_back(std::move(s));
    sender_index_.emplace(flow, index);
    (senders_.back().lossless ? lossless_ : paced_).push_back(index);
    net_.schedule_timer(rec.spec.start_time(), id_, kStart, index);
}

void HostNode::add_receiver(FlowId flow) {
    const auto& rec = flows_[flow];
    if (rec.spec.dst != id_) throw std::invalid_argument("flow destination does not match host");
    if (!rec.spec.finite()) return;
    Receiver r;
    r.flow = flow;
    r.n = rec.packets_total;
    r.sender = rec.spec.src;
    r.lossy = rec.spec.cls == TrafficClass::LossyCrossDc;
    r.got.assign(r.n, 0);
    receiver_index_.emplace(flow, static_cast<std::uint32_t>(receivers_.size()));
    receivers_.push_back(std::move(r));
}

const DcqcnState* HostNode::rate_state(FlowId flow) const {
    auto it = sender_index_.find(flow);
    return it == sender_index_.end() ? nullptr : &senders_[it->second].cc;
}

std::uint32_t HostNode::packet_size(const Sender& s, std::uint32_t idx) const {
    const auto& spec = flows_[s.flow].spec;
    if (!spec.finite()) return params_.mtu;
    const std::uint64_t offset = static_cast<std::uint64_t>(idx) * params_.mtu;
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(params_.mtu, spec.size - offset));
}

bool HostNode::ready(Sender& s) {
    // Drop retransmissions that were acknowledged while queued.
    while (!s.retx.empty() && s.acked[s.retx.front()]) s.retx.pop_front();
    return s.has_data();
}

void HostNode::request_wake(sim::Time at) {
    const sim::Time now = net_.now();
    if (wake_at_ >= now && wake_at_ <= at) return;
    wake_at_ = at;
    net_.schedule_timer(at, id_, kWake, 0);
}

void HostNode::start(std::uint32_t si) {
    Sender& s = senders_[si];
    const sim::Time now = net_.now();
    s.active = true;
    s.next_send = static_cast<double>(now);
    if (s.paced && !s.udp) {
        s.alpha_at = now + params_.dcqcn.alpha_timer;
        net_.schedule_timer(s.alpha_at, id_, kAlpha, si);
        s.increase_at = now + params_.dcqcn.increase_timer;
        net_.schedule_timer(s.increase_at, id_, kIncrease, si);
    }
    net_.kick(id_, 0);
}

void HostNode::arm_rto(Sender& s, std::uint32_t si) {
    if (s.rto_event_at >= 0 || s.rto_fifo.empty()) return;
    s.rto_event_at = s.rto_fifo.front().first;
    net_.schedule_timer(s.rto_event_at, id_, kRto, si);
}

PacketId HostNode::emit_data(Sender& s, std::uint32_t si) {
    const sim::Time now = net_.now();
    bool retx = false;
    std::uint32_t idx;
    if (!s.retx.empty()) {
        idx = s.retx.front();
        s.retx.pop_front();
        retx = true;
    } else {
        idx = s.next_new++;
    }
    const std::uint32_t size = packet_size(s, idx);
    auto& rec = flows_[s.flow];

    const PacketId pkt = net_.new_packet();
    Packet& p = net_.packets()[pkt];
    p.flow = s.flow;
    p.index = idx;
    p.seq = static_cast<std::uint64_t>(idx) * params_.mtu;
    p.size = size;
    p.cls = rec.spec.cls;
    p.priority = net::priority_of(p.cls);
    p.ecn = p.cls == TrafficClass::LossyCrossDc ? net::Ecn::Ect : net::Ecn::NotEct;
    p.src_dc = static_cast<std::uint8_t>(dc_);
    p.src = id_;
    p.dst = rec.spec.dst;
    p.orig_dst = rec.spec.dst;
    p.retransmission = retx;

    ++rec.packets_sent;
    rec.bytes_sent += size;
    if (retx) {
        ++rec.packets_retransmitted;
        rec.bytes_retransmitted += size;
    }
    if (!s.udp) FlowTable::bump<std::uint64_t>(rec.tx_bin_bytes, flows_.bin_index(now), size);

    if (s.lossless) {
        s.inflight += size;
    } else {
        const double rate = s.udp ? params_.dcqcn.line_rate : s.cc.current;
        const double gap = size * 8.0 / rate * 1e9;
        // Lateness under one gap comes from the integer clock and is absorbed;
        // after a real pause the schedule restarts from now.
        const double t = static_cast<double>(now);
        s.next_send = (t - s.next_send < gap ? s.next_send : t) + gap;
        if (!s.udp) {
            dcqcn_on_bytes(s.cc, params_.dcqcn, size);
            s.last_send[idx] = now;
            s.rto_fifo.emplace_back(now + params_.rto, idx);
            arm_rto(s, si);
        }
    }
    return pkt;
}

PacketId HostNode::pull(std::uint16_t /*port*/) {
    if (!control_.empty()) {
        const PacketId pkt = control_.front();
        control_.pop_front();
        return pkt;
    }
    if (!lossless_.empty() && !net_.port_state(id_, 0).lossless_paused) {
        const std::size_t n = lossless_.size();
        for (std::size_t k = 0; k < n; ++k) {
            const std::uint32_t si = lossless_[(lossless_rr_ + k) % n];
            Sender& s = senders_[si];
            if (!ready(s)) continue;
            const auto next = s.retx.empty() ? s.next_new : s.retx.front();
            if (s.inflight > 0 && s.inflight + packet_size(s, next) > params_.lossless_window) continue;
            lossless_rr_ = (lossless_rr_ + k + 1) % n;
            return emit_data(s, si);
        }
    }
    const double now = static_cast<double>(net_.now());
    std::int64_t best = -1;
    double wake = -1.0;
    for (std::uint32_t si : paced_) {
        Sender& s = senders_[si];
        if (!ready(s)) continue;
        if (s.next_send <= now) {
            if (best < 0 || s.next_send < senders_[best].next_send) best = si;
        } else if (wake < 0 || s.next_send < wake) {
            wake = s.next_send;
        }
    }
    if (best >= 0) return emit_data(senders_[best], static_cast<std::uint32_t>(best));
    if (wake >= 0) request_wake(static_cast<sim::Time>(std::ceil(wake)));
    return net::kNoPacket;
}

void HostNode::send_control(TrafficClass cls, FlowId flow, net::NodeId dst, std::vector<std::uint32_t>* acked) {
    const PacketId pkt = net_.new_packet();
    Packet& p = net_.packets()[pkt];
    p.flow = flow;
    p.cls = cls;
    p.priority = net::priority_of(cls);
    p.size = params_.control_bytes;
    p.src_dc = static_cast<std::uint8_t>(dc_);
    p.src = id_;
    p.dst = dst;
    p.orig_dst = dst;
    if (acked) p.acked.swap(*acked);
    control_.push_back(pkt);
    net_.kick(id_, 0);
}

void HostNode::send_ack(Receiver& r) {
    r.ack_at = -1;
    if (r.pending.empty()) return;
    send_control(TrafficClass::Ack, r.flow, r.sender, &r.pending);
    r.pending.clear();
}

void HostNode::receive(PacketId pkt, std::uint16_t /*in_port*/) {
    switch (net_.packets()[pkt].cls) {
        case TrafficClass::Ack: on_ack(pkt); return;
        case TrafficClass::Cnp: on_cnp(pkt); return;
        default: on_data(pkt); return;
    }
}

void HostNode::on_data(PacketId pkt) {
    const Packet& p = net_.packets()[pkt];
    if (p.dst != id_) throw std::logic_error("data packet delivered to the wrong host");
    const FlowId flow = p.flow;
    const std::uint32_t idx = p.index;
    const std::uint32_t size = p.size;
    const bool ce = p.ecn == net::Ecn::Ce;
    net_.deliver(pkt, id_);

    const sim::Time now = net_.now();
    auto it = receiver_index_.find(flow);
    if (it == receiver_index_.end()) return;
    Receiver& r = receivers_[it->second];
    auto& rec = flows_[flow];
    rec.bytes_delivered += size;
    FlowTable::bump<std::uint64_t>(rec.rx_bin_bytes, flows_.bin_index(now), size);

    if (r.lossy && ce && (r.last_cnp < 0 || now - r.last_cnp >= params_.cnp_interval)) {
        r.last_cnp = now;
        ++rec.cnps_sent_by_receiver;
        send_control(TrafficClass::Cnp, flow, r.sender, nullptr);
    }
    if (r.got[idx]) return;
    r.got[idx] = 1;
    ++r.got_count;
    r.pending.push_back(idx);
    if (r.got_count == r.n) {
        rec.rx_complete = now;
        send_ack(r);
    } else if (static_cast<int>(r.pending.size()) >= params_.ack_every) {
        send_ack(r);
    } else if (r.ack_at < 0) {
        r.ack_at = now + params_.ack_delay;
        net_.schedule_timer(r.ack_at, id_, kAck, it->second);
    }
}

void HostNode::on_ack(PacketId pkt) {
    Packet& p = net_.packets()[pkt];
    auto it = sender_index_.find(p.flow);
    if (it == sender_index_.end()) throw std::logic_error("ACK for a flow this host does not send");
    Sender& s = senders_[it->second];
    for (std::uint32_t idx : p.acked) {
        if (s.acked[idx]) continue;
        s.acked[idx] = 1;
        ++s.acked_count;
        if (s.lossless) s.inflight -= packet_size(s, idx);
    }
    net_.deliver(pkt, id_);
    if (!s.done && s.acked_count == s.n) {
        s.done = true;
        s.retx.clear();
        s.rto_fifo.clear();
        flows_.mark_complete(s.flow, net_.now());
    }
    net_.kick(id_, 0);
}

void HostNode::on_cnp(PacketId pkt) {
    const FlowId flow = net_.packets()[pkt].flow;
    net_.deliver(pkt, id_);
    auto it = sender_index_.find(flow);
    if (it == sender_index_.end()) return;
    Sender& s = senders_[it->second];
    auto& rec = flows_[flow];
    const sim::Time now = net_.now();
    ++rec.cnps_received;
    FlowTable::bump<std::uint32_t>(rec.cnp_bin, flows_.bin_index(now), 1u);
    if (!s.paced || s.udp || s.done) return;
    if (s.last_cut >= 0 && now - s.last_cut < params_.cnp_interval) return;
    s.last_cut = now;
    dcqcn_on_cnp(s.cc, params_.dcqcn);
    s.increase_at = now + params_.dcqcn.increase_timer;
    net_.schedule_timer(s.increase_at, id_, kIncrease, it->second);
}

void HostNode::on_timer(std::uint32_t kind, std::uint32_t arg) {
    const sim::Time now = net_.now();
    switch (kind) {
        case kStart: start(arg); return;
        case kWake:
            if (now == wake_at_) wake_at_ = -1;
            net_.kick(id_, 0);
            return;
        case kAck: {
            Receiver& r = receivers_[arg];
            if (now == r.ack_at) send_ack(r);
            return;
        }
        default: break;
    }
    Sender& s = senders_[arg];
    if (s.done) return;
    switch (kind) {
        case kRto: {
            if (now != s.rto_event_at) return;
            s.rto_event_at = -1;
            auto& rec = flows_[s.flow];
            while (!s.rto_fifo.empty() && s.rto_fifo.front().first <= now) {
                const auto [deadline, idx] = s.rto_fifo.front();
                s.rto_fifo.pop_front();
                // Stale if acked or resent since this entry was queued.
                if (s.acked[idx] || s.last_send[idx] + params_.rto != deadline) continue;
                s.retx.push_back(idx);
                ++rec.rto_expirations;
            }
            arm_rto(s, arg);
            net_.kick(id_, 0);
            return;
        }
        case kAlpha:
            if (now != s.alpha_at) return;
            dcqcn_alpha_tick(s.cc, params_.dcqcn);
            s.alpha_at = now + params_.dcqcn.alpha_timer;
            net_.schedule_timer(s.alpha_at, id_, kAlpha, arg);
            return;
        case kIncrease:
            if (now != s.increase_at) return;
            dcqcn_increase(s.cc, params_.dcqcn, true);
            s.increase_at = now + params_.dcqcn.increase_timer;
            net_.schedule_timer(s.increase_at, id_, kIncrease, arg);
            return;
        default: return;
    }
}

}  // namespace spillway::transport
