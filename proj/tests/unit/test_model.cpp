#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "evcharge/model.hpp"
#include "evcharge/scenario.hpp"
#include "oracles.hpp"

using namespace evcharge;

TEST_CASE("clock labels") {
    const auto grid = TimeGrid::with_clock_labels(3, 2.0, "08:00");
    CHECK(grid.label(1) == "08:00");
    CHECK(grid.label(3) == "12:00");
    CHECK(grid.start_hour() == doctest::Approx(8.0));
    CHECK(parse_clock("18:30") == doctest::Approx(18.5));
    CHECK_THROWS_AS(parse_clock("8h"), Error);
    CHECK(format_clock(23.5) == "23:30");
}

TEST_CASE("grid and class validation") {
    CHECK_THROWS_AS(TimeGrid(0, 1.0), Error);
    CHECK_THROWS_AS(TimeGrid(3, 0.0), Error);
    const TimeGrid grid(4, 1.0);
    CHECK(EVClassKey{1, 4}.valid_for(grid));
    CHECK_FALSE(EVClassKey{3, 2}.valid_for(grid));
    CHECK_FALSE(EVClassKey{2, 5}.valid_for(grid));
    CHECK(EVClassKey{2, 4}.window_length() == 3);

    ClassDemand demand;
    demand.add({1, 2}, 3.0);
    demand.add({1, 2}, 1.5);
    CHECK(demand.at({1, 2}) == 4.5);
    CHECK(demand.at({2, 2}) == 0.0);
    CHECK_THROWS_AS(demand.add({1, 1}, -1.0), Error);
    demand.set({3, 5}, 1.0);
    CHECK_THROWS_AS(demand.validate(grid), Error);
}

TEST_CASE("total load: empty schedule returns the baseline") {
    const TimeGrid grid(2, 1.0);
    const BaselineProfile baseline({-1.0, 2.0});
    const Schedule empty(grid);
    CHECK(total_load(empty, baseline) == PowerVector{-1.0, 2.0});
}

TEST_CASE("total load: one class adds its profile") {
    const TimeGrid grid(2, 1.0);
    Schedule s(grid);
    s.set_profile({1, 2}, {1.0, 1.0});
    CHECK(total_load(s, BaselineProfile::zeros(2)) == PowerVector{1.0, 1.0});
}

TEST_CASE("total load on the toy instance equals an independent per-slot sum") {
    const Scenario toy = toy_instance();
    Schedule s(toy.grid);
    // Hand-built schedule: one profile per class, values chosen arbitrarily.
    s.set_profile({1, 1}, {4, 0, 0, 0, 0, 0});
    s.set_profile({1, 3}, {1, 2, 4, 0, 0, 0});
    s.set_profile({4, 6}, {0, 0, 0, 1, 1, 2});
    const auto total = total_load(s, toy.baseline);
    const double expected[] = {3 + 4 + 1, 4 + 2, 4 + 4, 3 + 1, 3 + 1, 5 + 2};
    for (int t = 0; t < 6; ++t) CHECK(total[static_cast<std::size_t>(t)] == expected[t]);
}

TEST_CASE("total load is linear in the schedule") {
    oracle::Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const TimeGrid grid(5, 1.0);
        Schedule a(grid), b(grid), sum(grid);
        for (EVClassKey key : {EVClassKey{1, 3}, EVClassKey{2, 5}}) {
            PowerVector pa(5, 0.0), pb(5, 0.0), ps(5, 0.0);
            for (int t = key.arrival; t <= key.departure; ++t) {
                const auto i = static_cast<std::size_t>(t - 1);
                pa[i] = rng.uniform(0, 5);
                pb[i] = rng.uniform(0, 5);
                ps[i] = pa[i] + pb[i];
            }
            a.set_profile(key, pa);
            b.set_profile(key, pb);
            sum.set_profile(key, ps);
        }
        const auto zero = BaselineProfile::zeros(5);
        const auto la = total_load(a, zero), lb = total_load(b, zero), ls = total_load(sum, zero);
        for (std::size_t i = 0; i < 5; ++i) CHECK(ls[i] == doctest::Approx(la[i] + lb[i]).epsilon(1e-14));
    }
}

TEST_CASE("cost examples") {
    QuadraticCost square{1.0, 0.0, 0.0, 0.0, 100.0};
    CHECK(cost(std::vector<double>{0.0, 0.0}, square) == 0.0);
    QuadraticCost sq_plus{1.0, 1.0, 0.0, 0.0, 100.0};
    CHECK(cost(std::vector<double>{1.0, 2.0}, sq_plus) == 8.0);
    CHECK_THROWS_AS(cost(std::vector<double>{NAN}, square), Error);
}

TEST_CASE("cost is permutation invariant and convex in the load") {
    oracle::Rng rng(12);
    const QuadraticCost f{0.7, 1.3, 0.2, -20.0, 100.0};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(6), y(6);
        for (auto& v : x) v = rng.uniform(-5, 5);
        for (auto& v : y) v = rng.uniform(-5, 5);
        auto shuffled = x;
        std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());
        CHECK(cost(shuffled, f) == doctest::Approx(cost(x, f)).epsilon(1e-12));
        const double theta = rng.uniform(0, 1);
        std::vector<double> mix(6);
        for (std::size_t i = 0; i < 6; ++i) mix[i] = theta * x[i] + (1 - theta) * y[i];
        CHECK(cost(mix, f) <= theta * cost(x, f) + (1 - theta) * cost(y, f) + 1e-9);
    }
}

TEST_CASE("cost validation") {
    CHECK_NOTHROW(QuadraticCost({0.5, 0.0, 0.0, 0.0, 10.0}).validate());
    CHECK_THROWS_AS(QuadraticCost({-1.0, 0.0, 0.0, 0.0, 10.0}).validate(), Error);
    // f' = 2x is negative on [-5, 0).
    CHECK_THROWS_AS(QuadraticCost({1.0, 0.0, 0.0, -5.0, 10.0}).validate(), Error);
}

TEST_CASE("default cost is nondecreasing and nonnegative over the baseline range") {
    const BaselineProfile baseline({-84.0, -10.0, 0.0, 5.0});
    const auto f = QuadraticCost::for_baseline(baseline);
    CHECK_NOTHROW(f.validate());
    CHECK(f(-84.0) == doctest::Approx(0.0));
    CHECK(f.derivative(-84.0) == doctest::Approx(0.0));
    CHECK(f(0.0) == doctest::Approx(0.5 * 84 * 84));
}

TEST_CASE("schedule check") {
    const TimeGrid grid(3, 2.0);
    ClassDemand demand;
    demand.set({1, 2}, 8.0);
    Schedule s(grid);
    s.set_profile({1, 2}, {2.0, 2.0, 0.0});
    CHECK_NOTHROW(s.check(demand));
    CHECK(s.energy_kwh({1, 2}) == 8.0);
    s.set_profile({1, 2}, {2.0, 1.0, 0.0});
    CHECK_THROWS_AS(s.check(demand), Error);
    s.set_profile({1, 2}, {2.0, 1.0, 1.0});
    CHECK_THROWS_AS(s.check(demand), Error);
    CHECK_THROWS_AS(s.set_profile({1, 2}, {1.0}), Error);
    CHECK_THROWS_AS(s.profile({2, 3}), Error);
}
