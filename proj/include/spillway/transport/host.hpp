#pragma once

#include <cstdint>
#include <deque>
#include <unordered_map>
#include <utility>
#include <vector>

#include "spillway/net/network.hpp"
#include "spillway/transport/dcqcn.hpp"
#include "spillway/transport/flow.hpp"

namespace spillway::transport {

using net::PacketId;

struct TransportParams {
    std::uint32_t mtu = 4096;
    std::uint32_t control_bytes = 64;
    sim::Time rto = 16'800 * sim::kMicrosecond;
    DcqcnParams dcqcn;
    std::uint64_t lossless_window = 400'000;
    int ack_every = 16;
    sim::Time ack_delay = 50 * sim::kMicrosecond;
    sim::Time cnp_interval = 50 * sim::kMicrosecond;
};

/// GPU endpoint: NIC scheduler, sender state for flows it sources and
/// receiver state for flows it sinks.
class HostNode : public net::Node {
public:
    HostNode(net::Network& net, net::NodeId id, const TransportParams& params, FlowTable& flows);

    void add_sender(FlowId flow);
    void add_receiver(FlowId flow);

    void receive(PacketId pkt, std::uint16_t in_port) override;
    PacketId pull(std::uint16_t port) override;
    void on_timer(std::uint32_t kind, std::uint32_t arg) override;

    /// Current DCQCN state of a flow this host sends; nullptr if unknown.
    const DcqcnState* rate_state(FlowId flow) const;

private:
    enum TimerKind : std::uint32_t { kStart = 1, kWake, kRto, kAlpha, kIncrease, kAck };

    struct Sender {
        FlowId flow = 0;
        std::uint32_t n = 0;
        bool lossless = false;
        bool paced = false;   // rate-controlled lossy flow
        bool udp = false;
        bool active = false;
        bool done = false;
        std::uint32_t next_new = 0;
        std::deque<std::uint32_t> retx;
        std::vector<std::uint8_t> acked;
        std::vector<sim::Time> last_send;
        std::uint32_t acked_count = 0;
        std::uint64_t inflight = 0;
        DcqcnState cc;
        double next_send = 0.0;  // ns
        std::deque<std::pair<sim::Time, std::uint32_t>> rto_fifo;
        sim::Time rto_event_at = -1;
        sim::Time alpha_at = -1;
        sim::Time increase_at = -1;
        sim::Time last_cut = -1;  // CNPs closer together than cnp_interval cut the rate once

        bool has_data() const { return active && !done && (udp || !retx.empty() || next_new < n); }
    };

    struct Receiver {
        FlowId flow = 0;
        std::uint32_t n = 0;
        net::NodeId sender = 0;
        bool lossy = false;
        std::vector<std::uint8_t> got;
        std::uint32_t got_count = 0;
        std::vector<std::uint32_t> pending;
        sim::Time ack_at = -1;
        sim::Time last_cnp = -1;
    };

    bool ready(Sender& s);
    std::uint32_t packet_size(const Sender& s, std::uint32_t idx) const;
    PacketId emit_data(Sender& s, std::uint32_t sender_index);
    void on_data(PacketId pkt);
    void on_ack(PacketId pkt);
    void on_cnp(PacketId pkt);
    void send_ack(Receiver& r);
    void send_control(net::TrafficClass cls, FlowId flow, net::NodeId dst, std::vector<std::uint32_t>* acked);
    void start(std::uint32_t sender_index);
    void arm_rto(Sender& s, std::uint32_t sender_index);
    void request_wake(sim::Time at);

    TransportParams params_;
    FlowTable& flows_;
    int dc_;
    std::deque<PacketId> control_;
    std::vector<Sender> senders_;
    std::vector<Receiver> receivers_;
    std::unordered_map<FlowId, std::uint32_t> sender_index_;
    std::unordered_map<FlowId, std::uint32_t> receiver_index_;
    std::vector<std::uint32_t> lossless_;  // sender indices
    std::vector<std::uint32_t> paced_;     // sender indices, lossy and background
    std::size_t lossless_rr_ = 0;
    sim::Time wake_at_ = -1;
};

}  // namespace spillway::transport
