#pragma once

#include <cstdint>

#include "spillway/sim/time.hpp"

namespace spillway::transport {

struct DcqcnParams {
    double line_rate = 400e9;
    double g = 1.0 / 256.0;
    sim::Time alpha_timer = 55 * sim::kMicrosecond;
    sim::Time increase_timer = 300 * sim::kMicrosecond;
    std::uint64_t byte_counter = 10'000'000;
    double r_ai = 5e9;
    double r_hai = 50e9;
    double rate_min = 1e9;
    int fast_recovery_stages = 5;
};

/// Reaction-point state of one rate-controlled flow.
struct DcqcnState {
    double current = 0.0;
    double target = 0.0;
    double alpha = 1.0;
    int timer_stages = 0;
    int byte_stages = 0;
    std::uint64_t bytes_since = 0;
    bool cnp_in_window = false;

    static DcqcnState at_line_rate(const DcqcnParams& p) {
        DcqcnState s;
        s.current = s.target = p.line_rate;
        return s;
    }
};

/// Multiplicative decrease on a congestion notification.
void dcqcn_on_cnp(DcqcnState& s, const DcqcnParams& p);

/// Alpha-update timer: decays alpha unless a CNP arrived in the window.
void dcqcn_alpha_tick(DcqcnState& s, const DcqcnParams& p);

/// One rate-increase event, triggered either by the timer or by the byte counter.
void dcqcn_increase(DcqcnState& s, const DcqcnParams& p, bool from_timer);

/// Account transmitted bytes; returns true when the byte counter triggered an increase.
bool dcqcn_on_bytes(DcqcnState& s, const DcqcnParams& p, std::uint64_t bytes);

}  // namespace spillway::transport
