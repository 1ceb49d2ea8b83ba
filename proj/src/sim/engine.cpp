#include "spillway/sim/engine.hpp"

#include <string>
#include <utility>

namespace spillway::sim {

EventHandle Engine::schedule(Time time, EventHandler* handler, std::uint32_t kind,
                             std::uint32_t a, std::uint64_t b) {
    if (time < now_) {
        throw SchedulingError("event scheduled in the past: t=" + std::to_string(time) +
                              " now=" + std::to_string(now_));
    }
    Event ev{time, next_ordinal_++, handler, kind, a, b};
    queue_.push(ev);
    return EventHandle{ev.ordinal};
}

EventHandle Engine::schedule(Time time, std::function<void()> action) {
    std::uint32_t slot;
    if (!closures_.free.empty()) {
        slot = closures_.free.back();
        closures_.free.pop_back();
        closures_.slots[slot] = std::move(action);
    } else {
        slot = static_cast<std::uint32_t>(closures_.slots.size());
        closures_.slots.push_back(std::move(action));
    }
    return schedule(time, &closures_, 0, slot);
}

void Engine::ClosureHandler::handle(const Event& ev) {
    auto action = std::move(slots[ev.a]);
    slots[ev.a] = nullptr;
    free.push_back(ev.a);
    action();
}

void Engine::cancel(EventHandle handle) {
    if (handle.valid()) cancelled_.insert(handle.ordinal);
}

RunStats Engine::run_until(Time t_end) {
    RunStats stats;
    stop_requested_ = false;
    const std::uint64_t fired_before = fired_;
    while (!queue_.empty()) {
        const Event ev = queue_.top();
        if (ev.time > t_end) break;
        queue_.pop();
        if (!cancelled_.empty()) {
            auto it = cancelled_.find(ev.ordinal);
            if (it != cancelled_.end()) {
                cancelled_.erase(it);
                // A cancelled closure still owns its slot.
                if (ev.handler == &closures_) {
                    closures_.slots[ev.a] = nullptr;
                    closures_.free.push_back(ev.a);
                }
                continue;
            }
        }
        now_ = ev.time;
        ++fired_;
        ev.handler->handle(ev);
        if (stop_requested_) {
            stats.stopped_early = true;
            break;
        }
    }
    stats.events_fired = fired_ - fired_before;
    stats.end_time = now_;
    return stats;
}

}  // namespace spillway::sim
