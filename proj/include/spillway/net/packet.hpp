#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "spillway/sim/time.hpp"

namespace spillway::net {

using NodeId = std::uint32_t;
using PortId = std::uint32_t;
using FlowId = std::uint32_t;
using PacketId = std::uint32_t;

inline constexpr PacketId kNoPacket = std::numeric_limits<PacketId>::max();
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class TrafficClass : std::uint8_t {
    LosslessLocal,
    LossyCrossDc,
    Deflected,
    Drained,
    BackgroundUdp,
    Cnp,
    Ack,
};

enum class Ecn : std::uint8_t { NotEct, Ect, Ce };

/// Strict-priority scheduling classes at an egress port, highest first.
enum class SchedClass : std::uint8_t { Control = 0, Lossless = 1, Deflected = 2, Drained = 3, Lossy = 4 };
inline constexpr std::size_t kNumSchedClasses = 5;

constexpr SchedClass sched_class(TrafficClass c) {
    switch (c) {
        case TrafficClass::Cnp:
        case TrafficClass::Ack: return SchedClass::Control;
        case TrafficClass::LosslessLocal: return SchedClass::Lossless;
        case TrafficClass::Deflected: return SchedClass::Deflected;
        case TrafficClass::Drained: return SchedClass::Drained;
        case TrafficClass::LossyCrossDc:
        case TrafficClass::BackgroundUdp: return SchedClass::Lossy;
    }
    return SchedClass::Lossy;
}

/// Wire priority carried by the packet; lower value is served first.
constexpr std::uint8_t priority_of(TrafficClass c) { return static_cast<std::uint8_t>(sched_class(c)); }

constexpr bool is_control(TrafficClass c) { return c == TrafficClass::Cnp || c == TrafficClass::Ack; }

std::string_view to_string(TrafficClass c);

/// Where a deflected packet is headed: one spillway, or any member of a DC's spillway set.
struct SpillwayTarget {
    enum class Kind : std::uint8_t { Unicast, Anycast };
    Kind kind = Kind::Unicast;
    std::uint32_t address = 0;  // route address (node id for unicast, group address for anycast)
};

struct Encap {
    SpillwayTarget target;
    std::uint32_t overhead_bytes = 0;
};

struct Packet {
    FlowId flow = 0;
    std::uint64_t seq = 0;         // byte offset within the flow
    std::uint32_t index = 0;       // packet ordinal within the flow
    std::uint32_t size = 0;        // headers + payload, fixed at creation
    TrafficClass cls = TrafficClass::LossyCrossDc;
    Ecn ecn = Ecn::NotEct;
    std::uint8_t priority = 0;
    std::uint8_t src_dc = 0;
    NodeId src = kNoNode;
    NodeId dst = kNoNode;
    NodeId orig_dst = kNoNode;
    std::optional<Encap> encap;
    std::int32_t spillway_id_field = -1;  // reused identification field; -1 when unset
    std::uint16_t deflect_count = 0;
    std::uint16_t in_port = 0;            // local port index at the current hop
    bool retransmission = false;
    bool probe = false;
    sim::Time created = 0;
    std::uint32_t hops = 0;
    std::uint32_t deflected_hops = 0;
    std::vector<std::uint32_t> acked;     // ACK payload: packet indices received

    std::uint32_t wire_bytes() const { return size + (encap ? encap->overhead_bytes : 0); }
    bool is_data() const { return !is_control(cls); }
};

/// Slab of packets addressed by PacketId. Freed slots are reused.
class PacketPool {
public:
    PacketId allocate();
    void release(PacketId id);

    Packet& operator[](PacketId id) { return slots_[id]; }
    const Packet& operator[](PacketId id) const { return slots_[id]; }

    std::uint64_t created() const { return created_; }
    std::uint64_t released() const { return released_; }
    std::uint64_t live() const { return created_ - released_; }

    template <typename Fn>
    void for_each_live(Fn&& fn) const {
        for (PacketId i = 0; i < slots_.size(); ++i)
            if (in_use_[i]) fn(i, slots_[i]);
    }

private:
    std::vector<Packet> slots_;
    std::vector<std::uint8_t> in_use_;
    std::vector<PacketId> free_;
    std::uint64_t created_ = 0;
    std::uint64_t released_ = 0;
};

}  // namespace spillway::net
