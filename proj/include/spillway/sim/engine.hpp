#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "spillway/sim/time.hpp"

namespace spillway::sim {

class EventHandler;

/// One scheduled occurrence. `kind`, `a` and `b` are interpreted by the handler.
struct Event {
    Time time = 0;
    std::uint64_t ordinal = 0;
    EventHandler* handler = nullptr;
    std::uint32_t kind = 0;
    std::uint32_t a = 0;
    std::uint64_t b = 0;
};

class EventHandler {
public:
    virtual ~EventHandler() = default;
    virtual void handle(const Event& ev) = 0;
};

/// Handle returned by schedule(); the ordinal is unique per event.
struct EventHandle {
    std::uint64_t ordinal = 0;
    bool valid() const { return ordinal != 0; }
};

struct RunStats {
    std::uint64_t events_fired = 0;
    Time end_time = 0;
    bool stopped_early = false;
};

/// Thrown when an event is scheduled before the current simulated time.
class SchedulingError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Single-threaded discrete-event engine. Events with equal time fire in
/// the order they were scheduled.
class Engine {
public:
    Engine() = default;
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    Time now() const { return now_; }

    EventHandle schedule(Time time, EventHandler* handler, std::uint32_t kind,
                         std::uint32_t a = 0, std::uint64_t b = 0);

    /// Convenience overload for one-off closures (tests, setup code).
    EventHandle schedule(Time time, std::function<void()> action);

    /// Cancelled events are discarded when they reach the head of the queue.
    void cancel(EventHandle handle);

    /// Dispatch every event with time <= t_end, or until stop() is called.
    RunStats run_until(Time t_end);

    /// Makes the current run_until() return after the running event.
    void stop() { stop_requested_ = true; }

    std::size_t pending() const { return queue_.size() - cancelled_.size(); }
    std::uint64_t events_fired() const { return fired_; }

private:
    struct Later {
        bool operator()(const Event& x, const Event& y) const {
            if (x.time != y.time) return x.time > y.time;
            return x.ordinal > y.ordinal;
        }
    };

    class ClosureHandler : public EventHandler {
    public:
        void handle(const Event& ev) override;
        std::vector<std::function<void()>> slots;
        std::vector<std::uint32_t> free;
    };

    Time now_ = 0;
    std::uint64_t next_ordinal_ = 1;
    std::uint64_t fired_ = 0;
    bool stop_requested_ = false;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::unordered_set<std::uint64_t> cancelled_;
    ClosureHandler closures_;
};

}  // namespace spillway::sim
