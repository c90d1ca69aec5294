#include "doctest.h"

#include <sstream>

#include "evcharge/metrics.hpp"

using namespace evcharge;

TEST_CASE("identical profiles have no overload") {
    const auto s = overload(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3});
    CHECK(s.overload_slots == 0);
    CHECK(s.avg_overload_kw == 0.0);
}

TEST_CASE("one overloaded slot") {
    const auto s = overload(std::vector<double>{5, 3}, std::vector<double>{4, 3});
    CHECK(s.overload_slots == 1);
    CHECK(s.avg_overload_kw == doctest::Approx(1.0));
    CHECK_THROWS_AS(overload(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST_CASE("cost gap") {
    CHECK(cost_gap_pct(101.0, 100.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(cost_gap_pct(1.0, 0.0), Error);
}

TEST_CASE("commute base point") {
    const Scenario s = load_scenario(EVCHARGE_FIXTURES "/commute.json");
    const auto cmp = compare(s);
    CHECK(cmp.stats.cost_gap_pct >= 0.0);
    CHECK(cmp.stats.cost_gap_pct <= 5.0);
    CHECK(cmp.stats.overload_slots > 0);
    CHECK(cmp.online.cost >= cmp.offline.optimal_cost);
}

TEST_CASE("sweep points") {
    CHECK(sweep_points({}).size() == 9);
    SweepOptions one;
    one.from_pct = one.to_pct = 150.0;
    CHECK(sweep_points(one) == std::vector<double>{150.0});
    SweepOptions uneven;
    uneven.step_pct = 30.0;
    CHECK_THROWS_AS(sweep_points(uneven), Error);
    SweepOptions wide;
    wide.to_pct = 325.0;
    CHECK_THROWS_AS(sweep_points(wide), Error);
}

TEST_CASE("single-point sweep equals a direct comparison") {
    const Scenario s = load_scenario(EVCHARGE_FIXTURES "/commute.json");
    SweepOptions opts;
    opts.from_pct = opts.to_pct = 100.0;
    opts.with_prices = false;
    const auto rows = variance_sweep(s, opts);
    REQUIRE(rows.size() == 1);
    const auto cmp = compare(s);
    CHECK(rows[0].stats.overload_slots == cmp.stats.overload_slots);
    CHECK(rows[0].stats.avg_overload_kw == cmp.stats.avg_overload_kw);
    CHECK(rows[0].online_cost == cmp.online.cost);
    CHECK(rows[0].offline_cost == cmp.offline.optimal_cost);
}

TEST_CASE("default sweep: nine rows, same result with more workers") {
    const Scenario s = load_scenario(EVCHARGE_FIXTURES "/commute.json");
    SweepOptions serial;
    serial.with_prices = false;
    SweepOptions parallel = serial;
    parallel.jobs = 4;
    const auto a = variance_sweep(s, serial);
    const auto b = variance_sweep(s, parallel);
    REQUIRE(a.size() == 9);
    std::ostringstream ca, cb;
    write_sweep_csv(ca, a);
    write_sweep_csv(cb, b);
    CHECK(ca.str() == cb.str());
    CHECK(ca.str().rfind("variance_pct,overload_slots,avg_overload_kw,cost_gap_pct\r\n100,", 0) == 0);
}

TEST_CASE("sweep breakpoints") {
    const Scenario s = load_scenario(EVCHARGE_FIXTURES "/commute.json");
    SweepOptions opts;
    opts.with_prices = false;
    const auto rows = variance_sweep(s, opts);
    auto at = [&](double pct) -> const SweepRow& {
        for (const auto& r : rows) {
            if (r.variance_pct == pct) return r;
        }
        FAIL("missing sweep point");
        return rows.front();
    };
    // 8 pm departures (slot 20) join at 125 %: one more overloaded slot, smaller mean excess.
    CHECK(at(100).departure_support.back() == 19);
    CHECK(at(125).departure_support.back() == 20);
    CHECK(at(125).stats.overload_slots > at(100).stats.overload_slots);
    CHECK(at(125).stats.avg_overload_kw < at(100).stats.avg_overload_kw);
    // 6 am arrivals (slot 7) join at 250 % and the mean excess jumps up.
    CHECK(at(225).arrival_support.front() == 8);
    CHECK(at(250).arrival_support.front() == 7);
    CHECK(at(250).stats.avg_overload_kw > at(225).stats.avg_overload_kw);
}

TEST_CASE("sweep needs a commute scenario") {
    CHECK_THROWS_AS(variance_sweep(toy_instance(), {}), Error);
}
