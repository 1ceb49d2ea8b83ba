#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spillway/net/packet.hpp"
#include "spillway/sim/time.hpp"

namespace spillway::transport {

using net::FlowId;
using net::NodeId;

/// Role of a flow in the workload; reporting groups flows by it.
enum class FlowRole : std::uint8_t { LongHaul, Collective, Background };
std::string to_string(FlowRole r);
FlowRole flow_role_from_string(const std::string& s);

struct FlowSpec {
    FlowId id = 0;
    NodeId src = 0;
    NodeId dst = 0;
    std::uint64_t size = 0;  // bytes; 0 means unbounded (background sources)
    net::TrafficClass cls = net::TrafficClass::LossyCrossDc;
    FlowRole role = FlowRole::LongHaul;
    sim::Time start = 0;
    sim::Time jitter = 0;

    sim::Time start_time() const { return start + jitter; }
    bool finite() const { return size > 0; }
};

/// Per-flow outcome and timeline, filled in by the hosts during a run.
struct FlowRecord {
    FlowSpec spec;
    std::uint32_t packets_total = 0;
    sim::Time completion = -1;  // sender saw the final ACK
    sim::Time rx_complete = -1; // receiver held every byte
    std::uint64_t packets_sent = 0;
    std::uint64_t bytes_sent = 0;
    std::uint64_t packets_retransmitted = 0;
    std::uint64_t bytes_retransmitted = 0;
    std::uint64_t rto_expirations = 0;
    std::uint64_t cnps_received = 0;
    std::uint64_t cnps_sent_by_receiver = 0;
    std::uint64_t drops = 0;
    std::uint64_t drops_in_dest_dc = 0;
    std::uint64_t bytes_delivered = 0;
    // 1 ms bins
    std::vector<std::uint64_t> tx_bin_bytes;
    std::vector<std::uint64_t> rx_bin_bytes;
    std::vector<std::uint32_t> cnp_bin;

    bool complete() const { return completion >= 0; }
    double fct_seconds() const { return complete() ? sim::to_seconds(completion - spec.start_time()) : -1.0; }
};

class FlowTable {
public:
    explicit FlowTable(std::vector<FlowSpec> specs, std::uint32_t mtu, sim::Time bin = sim::kMillisecond);

    std::size_t size() const { return records_.size(); }
    FlowRecord& operator[](FlowId id) { return records_.at(id); }
    const FlowRecord& operator[](FlowId id) const { return records_.at(id); }
    const std::vector<FlowRecord>& records() const { return records_; }
    std::vector<FlowRecord>& records() { return records_; }

    std::uint32_t mtu() const { return mtu_; }
    sim::Time bin() const { return bin_; }
    std::size_t bin_index(sim::Time t) const { return static_cast<std::size_t>(t / bin_); }

    void mark_complete(FlowId id, sim::Time t);
    std::size_t finite_flows() const { return finite_; }
    std::size_t finite_completed() const { return completed_; }
    void on_all_complete(std::function<void()> fn) { all_done_ = std::move(fn); }

    template <typename T>
    static void bump(std::vector<T>& bins, std::size_t i, T v) {
        if (bins.size() <= i) bins.resize(i + 1, T{});
        bins[i] += v;
    }

private:
    std::vector<FlowRecord> records_;
    std::uint32_t mtu_;
    sim::Time bin_;
    std::size_t finite_ = 0;
    std::size_t completed_ = 0;
    std::function<void()> all_done_;
};

}  // namespace spillway::transport
