#include "spillway/net/packet.hpp"

#include <cassert>

namespace spillway::net {

std::string_view to_string(TrafficClass c) {
    switch (c) {
        case TrafficClass::LosslessLocal: return "LOSSLESS_LOCAL";
        case TrafficClass::LossyCrossDc: return "LOSSY_CROSSDC";
        case TrafficClass::Deflected: return "DEFLECTED";
        case TrafficClass::Drained: return "DRAINED";
        case TrafficClass::BackgroundUdp: return "BACKGROUND_UDP";
        case TrafficClass::Cnp: return "CNP";
        case TrafficClass::Ack: return "ACK";
    }
    return "?";
}

PacketId PacketPool::allocate() {
    PacketId id;
    if (!free_.empty()) {
        id = free_.back();
        free_.pop_back();
        auto acked = std::move(slots_[id].acked);
        acked.clear();
        slots_[id] = Packet{};
        slots_[id].acked = std::move(acked);
    } else {
        id = static_cast<PacketId>(slots_.size());
        slots_.emplace_back();
        in_use_.push_back(0);
    }
    in_use_[id] = 1;
    ++created_;
    return id;
}

void PacketPool::release(PacketId id) {
    assert(in_use_[id]);
    in_use_[id] = 0;
    free_.push_back(id);
    ++released_;
}

}  // namespace spillway::net
