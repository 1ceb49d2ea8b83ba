#include "spillway/transport/dcqcn.hpp"

#include <algorithm>

namespace spillway::transport {

void dcqcn_on_cnp(DcqcnState& s, const DcqcnParams& p) {
    s.target = s.current;
    s.current = std::max(p.rate_min, s.current * (1.0 - s.alpha / 2.0));
    s.alpha = (1.0 - p.g) * s.alpha + p.g;
    s.timer_stages = 0;
    s.byte_stages = 0;
    s.bytes_since = 0;
    s.cnp_in_window = true;
}

void dcqcn_alpha_tick(DcqcnState& s, const DcqcnParams& p) {
    if (!s.cnp_in_window) s.alpha = (1.0 - p.g) * s.alpha;
    s.cnp_in_window = false;
}

void dcqcn_increase(DcqcnState& s, const DcqcnParams& p, bool from_timer) {
    if (from_timer) {
        ++s.timer_stages;
    } else {
        ++s.byte_stages;
    }
    const int f = p.fast_recovery_stages;
    if (std::max(s.timer_stages, s.byte_stages) < f) {
        // fast recovery: close half the gap to the target
    } else if (std::min(s.timer_stages, s.byte_stages) >= f) {
        s.target += p.r_hai;
    } else {
        s.target += p.r_ai;
    }
    s.target = std::min(s.target, p.line_rate);
    s.current = std::min(p.line_rate, (s.current + s.target) / 2.0);
}

bool dcqcn_on_bytes(DcqcnState& s, const DcqcnParams& p, std::uint64_t bytes) {
    s.bytes_since += bytes;
    if (s.bytes_since < p.byte_counter) return false;
    s.bytes_since -= p.byte_counter;
    dcqcn_increase(s, p, false);
    return true;
}

}  // namespace spillway::transport
