#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "spillway/sim/engine.hpp"
#include "spillway/sim/rng.hpp"

using namespace spillway::sim;

TEST_SUITE("sim") {
    TEST_CASE("events at equal time fire in scheduling order") {
        Engine e;
        std::vector<std::string> log;
        e.schedule(0, [&] { log.push_back("init"); });
        e.schedule(0, [&] { log.push_back("init2"); });
        e.schedule(0, [&] { log.push_back("init3"); });
        e.run_until(10);
        CHECK(log == std::vector<std::string>{"init", "init2", "init3"});
    }

    TEST_CASE("events fire in time order regardless of insertion order") {
        Engine e;
        std::vector<Time> seen;
        for (Time t : {50, 10, 30, 20, 40}) e.schedule(t, [&, t] { seen.push_back(e.now()); });
        e.run_until(100);
        CHECK(seen == std::vector<Time>{10, 20, 30, 40, 50});
    }

    TEST_CASE("cancelled event never fires") {
        Engine e;
        bool fired = false;
        auto h = e.schedule(5, [&] { fired = true; });
        e.cancel(h);
        const auto stats = e.run_until(100);
        CHECK_FALSE(fired);
        CHECK(stats.events_fired == 0);
        CHECK(e.pending() == 0);
    }

    TEST_CASE("empty queue returns immediately") {
        Engine e;
        const auto stats = e.run_until(1'000'000);
        CHECK(stats.events_fired == 0);
        CHECK(e.now() == 0);
    }

    TEST_CASE("t_end is inclusive") {
        Engine e;
        int n = 0;
        e.schedule(0, [&] { ++n; });
        e.schedule(1, [&] { ++n; });
        CHECK(e.run_until(0).events_fired == 1);
        CHECK(n == 1);
        CHECK(e.pending() == 1);
    }

    TEST_CASE("scheduling in the past is rejected") {
        Engine e;
        e.schedule(100, [&] { CHECK_THROWS_AS(e.schedule(99, [] {}), SchedulingError); });
        e.run_until(200);
        CHECK(e.now() == 100);
    }

    TEST_CASE("stop ends the run after the current event") {
        Engine e;
        int n = 0;
        e.schedule(1, [&] { ++n; e.stop(); });
        e.schedule(2, [&] { ++n; });
        const auto stats = e.run_until(10);
        CHECK(stats.stopped_early);
        CHECK(n == 1);
        e.run_until(10);
        CHECK(n == 2);
    }

    TEST_CASE("events scheduled from handlers at the current time run in the same pass") {
        Engine e;
        std::vector<int> order;
        e.schedule(5, [&] {
            order.push_back(1);
            e.schedule(5, [&] { order.push_back(3); });
        });
        e.schedule(5, [&] { order.push_back(2); });
        e.run_until(5);
        CHECK(order == std::vector<int>{1, 2, 3});
    }

    TEST_CASE("same seed and stream give the same draws") {
        Rng a(42, 7), b(42, 7);
        for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    }

    TEST_CASE("different streams are decorrelated") {
        Rng a(42, 1), b(42, 2);
        int equal = 0;
        for (int i = 0; i < 1000; ++i) equal += a.next_u64() == b.next_u64();
        CHECK(equal == 0);
    }

    TEST_CASE("uniform_index stays in range and covers it") {
        Rng r(3, 0);
        std::set<std::uint64_t> seen;
        for (int i = 0; i < 10'000; ++i) {
            const auto v = r.uniform_index(7);
            REQUIRE(v < 7);
            seen.insert(v);
        }
        CHECK(seen.size() == 7);
        for (int i = 0; i < 1000; ++i) CHECK(r.uniform_index(1) == 0);
    }

    TEST_CASE("uniform01 lies in [0, 1) with mean near one half") {
        Rng r(9, 9);
        double sum = 0.0;
        const int n = 100'000;
        for (int i = 0; i < n; ++i) {
            const double u = r.uniform01();
            REQUIRE(u >= 0.0);
            REQUIRE(u < 1.0);
            sum += u;
        }
        // Standard error of the mean is sqrt(1/12/n) ~ 0.0009.
        CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    }

    TEST_CASE("bernoulli edge probabilities") {
        Rng r(1, 1);
        for (int i = 0; i < 1000; ++i) {
            CHECK_FALSE(r.bernoulli(0.0));
            CHECK(r.bernoulli(1.0));
        }
    }

    TEST_CASE("mix64 is a bijection on a sample") {
        std::set<std::uint64_t> out;
        for (std::uint64_t i = 0; i < 10'000; ++i) out.insert(mix64(i));
        CHECK(out.size() == 10'000);
    }
}
