#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "spillway/net/packet.hpp"
#include "spillway/net/topology.hpp"
#include "spillway/sim/engine.hpp"

namespace spillway::net {

class Network;

enum class DropReason : std::uint8_t {
    BufferOverflow,     // lossy admission failed and the packet was not deflectable
    SpillwayPath,       // DEFLECTED class overflowed on its way to a spillway
    SpillwayOverflow,   // spillway buffer full
    NeighborExhausted,  // in-fabric deflection found no alternate with room
};
inline constexpr std::size_t kNumDropReasons = 4;
const char* to_string(DropReason r);

/// Receives packet lifecycle callbacks; implemented by the metrics collector.
class PacketObserver {
public:
    virtual ~PacketObserver() = default;
    virtual void on_delivered(const Packet&, NodeId /*at*/, sim::Time) {}
    virtual void on_dropped(const Packet&, DropReason, NodeId /*at*/, sim::Time) {}
    virtual void on_transmit(const Packet&, const PortInfo&, sim::Time) {}
    virtual void on_deflected(const Packet&, NodeId /*at*/, sim::Time) {}
};

/// Simulation entity attached to the network: a switch, a host NIC or a spillway.
class Node {
public:
    Node(Network& net, NodeId id) : net_(net), id_(id) {}
    virtual ~Node() = default;
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    NodeId id() const { return id_; }

    /// A packet finished arriving on local port `in_port`.
    virtual void receive(PacketId pkt, std::uint16_t in_port) = 0;

    /// The egress of local port `port` is idle: hand over the next packet or kNoPacket.
    virtual PacketId pull(std::uint16_t port) = 0;

    virtual void on_timer(std::uint32_t /*kind*/, std::uint32_t /*arg*/) {}

    /// The peer on `port` paused or resumed our lossless transmissions.
    virtual void on_pfc(std::uint16_t /*port*/, bool /*pause*/) {}

    /// Bytes currently buffered at this node.
    virtual std::uint64_t occupancy() const { return 0; }

protected:
    Network& net_;
    NodeId id_;
};

struct PortRuntime {
    bool busy = false;
    bool lossless_paused = false;  // set by a PFC PAUSE from the peer
    std::uint64_t carry_ps = 0;
    std::uint64_t bytes_sent = 0;
};

struct NetworkCounters {
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::array<std::uint64_t, kNumDropReasons> drops_by_reason{};
    std::uint64_t pfc_pauses = 0;
    std::uint64_t transmissions = 0;
};

/// Owns the nodes, the packet pool and per-port link state; dispatches link
/// and timer events to nodes.
class Network : public sim::EventHandler {
public:
    Network(sim::Engine& engine, const Topology& topo);

    sim::Engine& engine() { return engine_; }
    sim::Time now() const { return engine_.now(); }
    const Topology& topology() const { return topo_; }
    PacketPool& packets() { return pool_; }
    const PacketPool& packets() const { return pool_; }
    const NetworkCounters& counters() const { return counters_; }

    void set_observer(PacketObserver* obs) { observer_ = obs; }
    PacketObserver* observer() { return observer_; }

    void attach(std::unique_ptr<Node> node);
    Node& node(NodeId n) { return *nodes_.at(n); }
    template <typename T>
    T& node_as(NodeId n) { return static_cast<T&>(*nodes_.at(n)); }
    bool has_node(NodeId n) const { return n < nodes_.size() && nodes_[n] != nullptr; }

    PortId global_port(NodeId n, std::uint16_t local) const { return topo_.node(n).ports[local]; }
    const PortRuntime& port_state(NodeId n, std::uint16_t local) const { return ports_[global_port(n, local)]; }

    /// Ask the owner of an idle port for its next packet and start serializing it.
    void kick(NodeId n, std::uint16_t local);

    /// Signal PFC toward whoever feeds local port `local` of node `n`.
    void send_pfc(NodeId n, std::uint16_t local, bool pause);

    sim::EventHandle schedule_timer(sim::Time at, NodeId n, std::uint32_t kind, std::uint32_t arg = 0);

    PacketId new_packet();
    void deliver(PacketId pkt, NodeId at);
    void drop(PacketId pkt, DropReason reason, NodeId at);
    void notify_deflected(PacketId pkt, NodeId at);

    void handle(const sim::Event& ev) override;

private:
    enum EventKind : std::uint32_t { kTxDone = 1, kArrive = 2, kPfc = 3, kTimer = 4 };

    void start_tx(PortId gp, PacketId pkt);

    sim::Engine& engine_;
    const Topology& topo_;
    PacketPool pool_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<PortRuntime> ports_;
    NetworkCounters counters_;
    PacketObserver* observer_ = nullptr;
};

}  // namespace spillway::net
