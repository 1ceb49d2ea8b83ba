#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace spillway::testing {

/// Brute-force single-port collision: the remote sender emits one unit per
/// 1 us step, every unit sent before `ta_us` reaches a blocked port and is lost,
/// and a lost unit is resent one RTO after its send. Retries go first when the
/// sender is busy. Returns the completion time in seconds (last send, its
/// serialization step, then a full round trip for delivery plus ACK).
inline double fct_oracle(std::int64_t L_us, std::int64_t tr_us, std::int64_t ta_us, double alpha) {
    const std::int64_t rtt_ns = 2 * L_us * 1000;
    const auto rto_ns = static_cast<std::int64_t>(std::llround(alpha * static_cast<double>(rtt_ns)));
    std::vector<std::int64_t> retry_due;  // FIFO of due steps; dues are monotone in send order
    std::size_t head = 0;
    std::int64_t fresh_left = tr_us;
    std::int64_t t = 0;
    std::int64_t last_send = -1;
    while (fresh_left > 0 || head < retry_due.size()) {
        const bool retry_ready = head < retry_due.size() && retry_due[head] <= t;
        if (!retry_ready && fresh_left == 0) {
            t = retry_due[head];  // idle until the next retry is due
            continue;
        }
        if (retry_ready) {
            ++head;
        } else {
            --fresh_left;
        }
        last_send = t;
        if (t < ta_us) {
            // First step at or after send + RTO.
            retry_due.push_back((t * 1000 + rto_ns + 999) / 1000);
        }
        ++t;
    }
    return static_cast<double>((last_send + 1) * 1000 + rtt_ns) * 1e-9;
}

}  // namespace spillway::testing
