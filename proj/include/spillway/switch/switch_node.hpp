#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <unordered_map>
#include <vector>

#include "spillway/net/network.hpp"
#include "spillway/sim/rng.hpp"

namespace spillway::sw {

using net::NodeId;
using net::PacketId;

enum class DeflectPolicy : std::uint8_t { Drop, Spillway, NeighborDeflect };
enum class SelectMode : std::uint8_t { DcAnycast, SwAnycast, UnicastHash };

struct SelectPolicy {
    SelectMode mode = SelectMode::DcAnycast;
    bool sticky = true;
};

struct SwitchParams {
    std::uint64_t buffer_bytes = 64'000'000;
    double dt_alpha = 1.0;
    // Drained packets share the lossy-side buffer at a much lower threshold so a
    // spillway burst cannot crowd out first-pass traffic at the destination leaf.
    double dt_alpha_drained = 1.0 / 32.0;
    std::uint64_t ecn_kmin = 400'000;
    std::uint64_t ecn_kmax = 1'600'000;
    double ecn_pmax = 0.2;
    std::uint64_t pfc_xoff = 512'000;
    std::uint64_t pfc_xon = 256'000;
    DeflectPolicy deflect = DeflectPolicy::Spillway;
    SelectPolicy select;
    std::uint32_t encap_bytes = 38;
    bool fast_cnp = true;
    sim::Time cnp_interval = 50 * sim::kMicrosecond;
    std::uint32_t control_bytes = 64;
};

/// Marking probability for a class queue holding `q` bytes at enqueue time.
double ecn_probability(std::uint64_t q, const SwitchParams& p);

/// Dynamic-threshold admission: the queue may grow to `alpha` times the free buffer.
bool dt_admit(std::uint64_t queue_bytes, std::uint64_t occupancy, std::uint32_t bytes, std::uint64_t buffer_bytes,
              double alpha);

/// Spillway a deflected packet is sent toward. `dc` is the deflecting switch's DC.
net::SpillwayTarget select_spillway(const net::Topology& topo, int dc, const net::Packet& pkt,
                                    const SelectPolicy& policy, sim::Rng& rng);

struct SwitchCounters {
    std::uint64_t enqueued = 0;
    std::uint64_t deflected = 0;
    std::uint64_t neighbor_deflected = 0;
    std::uint64_t dropped = 0;
    std::uint64_t lossless_dropped = 0;
    std::uint64_t ecn_marked = 0;
    std::uint64_t fast_cnps = 0;
    std::uint64_t pauses_sent = 0;
    std::uint64_t peak_occupancy = 0;
};

/// Output-queued shared-buffer switch with strict-priority egress.
class SwitchNode : public net::Node {
public:
    SwitchNode(net::Network& net, NodeId id, const SwitchParams& params, std::uint64_t seed);

    void receive(PacketId pkt, std::uint16_t in_port) override;
    PacketId pull(std::uint16_t port) override;
    std::uint64_t occupancy() const override { return occupancy_; }

    std::uint64_t queue_bytes(std::uint16_t port, net::SchedClass c) const {
        return ports_[port].bytes[static_cast<std::size_t>(c)];
    }
    std::size_t queue_length(std::uint16_t port, net::SchedClass c) const {
        return ports_[port].q[static_cast<std::size_t>(c)].size();
    }
    std::uint64_t lossless_ingress_bytes(std::uint16_t port) const { return ports_[port].lossless_in; }
    const SwitchCounters& counters() const { return counters_; }
    const SwitchParams& params() const { return params_; }

    /// Sum of per-queue bytes; equals occupancy() whenever accounting is correct.
    std::uint64_t queued_bytes_total() const;

private:
    struct PortQueues {
        std::array<std::deque<PacketId>, net::kNumSchedClasses> q;
        std::array<std::uint64_t, net::kNumSchedClasses> bytes{};
        std::uint64_t lossless_in = 0;  // lossless bytes that entered through this port
        bool pausing_upstream = false;
    };

    void enqueue(PacketId pkt, std::uint16_t port);
    bool admit(PacketId pkt, std::uint16_t port) const;
    void forward_control(PacketId pkt);
    void handle_lossy(PacketId pkt, std::uint16_t in_port, std::uint16_t port);
    void deflect_to_spillway(PacketId pkt);
    void neighbor_deflect(PacketId pkt, std::uint16_t in_port, std::uint16_t egress);
    void maybe_mark(net::Packet& p, std::uint16_t port);
    void maybe_fast_cnp(PacketId pkt, std::uint16_t port);
    bool deflect_eligible(const net::Packet& p) const;

    SwitchParams params_;
    const net::NodeInfo& info_;
    sim::Rng rng_;
    std::vector<PortQueues> ports_;
    std::uint64_t occupancy_ = 0;
    std::unordered_map<net::FlowId, sim::Time> last_cnp_;
    SwitchCounters counters_;
};

}  // namespace spillway::sw
