#include "spillway/transport/flow.hpp"

#include <stdexcept>

namespace spillway::transport {

std::string to_string(FlowRole r) {
    switch (r) {
        case FlowRole::LongHaul: return "long_haul";
        case FlowRole::Collective: return "collective";
        case FlowRole::Background: return "background";
    }
    return "?";
}

FlowRole flow_role_from_string(const std::string& s) {
    if (s == "long_haul") return FlowRole::LongHaul;
    if (s == "collective") return FlowRole::Collective;
    if (s == "background") return FlowRole::Background;
    throw std::invalid_argument("unknown flow role '" + s + "'");
}

FlowTable::FlowTable(std::vector<FlowSpec> specs, std::uint32_t mtu, sim::Time bin) : mtu_(mtu), bin_(bin) {
    records_.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].id != i) throw std::invalid_argument("flow ids must be dense and ordered");
        FlowRecord rec;
        rec.spec = specs[i];
        rec.packets_total = static_cast<std::uint32_t>((specs[i].size + mtu - 1) / mtu);
        if (specs[i].finite()) ++finite_;
        records_.push_back(std::move(rec));
    }
}

void FlowTable::mark_complete(FlowId id, sim::Time t) {
    auto& rec = records_.at(id);
    if (rec.complete()) return;
    rec.completion = t;
    ++completed_;
    if (completed_ == finite_ && all_done_) all_done_();
}

}  // namespace spillway::transport
