#include "evcharge/online.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "evcharge/waterfill.hpp"

namespace evcharge {

namespace {

std::size_t idx(int slot) { return static_cast<std::size_t>(slot - 1); }

void validate_event(const OnlineState& state, const ArrivalEvent& event) {
    const int a = event.arrival;
    require(state.grid.contains(a), ErrorKind::InvalidArgument,
            "arrival slot " + std::to_string(a) + " is outside the time grid");
    if (state.last_arrival) {
        require(a > *state.last_arrival, ErrorKind::InvalidArgument,
                "arrival events out of order: slot " + std::to_string(a) + " after slot " +
                    std::to_string(*state.last_arrival));
    }
    for (const auto& [d, kwh] : event.new_demands) {
        require(d >= a && state.grid.contains(d), ErrorKind::InvalidArgument,
                "event at slot " + std::to_string(a) + " has invalid departure " + std::to_string(d));
        require(std::isfinite(kwh) && kwh >= 0.0, ErrorKind::InvalidArgument,
                "event at slot " + std::to_string(a) + " has a negative energy need");
    }
}

} // namespace

OnlineState OnlineState::initial(TimeGrid grid, BaselineProfile baseline) {
    baseline.validate(grid);
    const auto n = static_cast<std::size_t>(grid.num_slots());
    return OnlineState{std::move(grid), std::move(baseline), std::nullopt, {}, {},
                       PowerVector(n, 0.0), {}};
}

OnlineState advance_and_update(const OnlineState& state, const ArrivalEvent& event) {
    validate_event(state, event);
    const int a = event.arrival;
    const double delta = state.grid.slot_hours();

    OnlineState next = state;
    if (state.last_arrival) {
        const int prev = *state.last_arrival;
        for (auto& [d, plan] : next.programmed) {
            auto& executed = next.realized_by_departure[d];
            if (executed.empty()) executed.assign(plan.size(), 0.0);
            double delivered = 0.0;
            for (int t = prev; t < a; ++t) {
                next.realized[idx(t)] += plan[idx(t)];
                executed[idx(t)] += plan[idx(t)];
                delivered += plan[idx(t)];
                plan[idx(t)] = 0.0;
            }
            auto it = next.remaining.find(d);
            if (it != next.remaining.end()) it->second -= delta * delivered;
        }
    }

    for (auto it = next.remaining.begin(); it != next.remaining.end();) {
        const int d = it->first;
        const double before = state.remaining.at(d);
        const double tol = kConservationTol * std::max(1.0, before);
        require(it->second >= -tol, ErrorKind::Solver,
                "over-delivery for departure " + std::to_string(d));
        if (it->second <= tol) {
            it = next.remaining.erase(it);
            continue;
        }
        require(d >= a, ErrorKind::Infeasible,
                "departure slot " + std::to_string(d) + " passed with " + std::to_string(it->second) +
                    " kWh still unmet");
        ++it;
    }
    for (auto it = next.programmed.begin(); it != next.programmed.end();) {
        it = it->first < a ? next.programmed.erase(it) : std::next(it);
    }

    for (const auto& [d, kwh] : event.new_demands) {
        if (kwh > 0.0) next.remaining[d] += kwh;
    }
    next.last_arrival = a;
    return next;
}

ArrivalPlan schedule_arrival(const OnlineState& state, const QuadraticCost& f) {
    require(state.last_arrival.has_value(), ErrorKind::InvalidArgument,
            "schedule_arrival needs a state positioned at an arrival slot");
    const int a = *state.last_arrival;
    const double delta = state.grid.slot_hours();
    const auto n = static_cast<std::size_t>(state.grid.num_slots());

    // Fictitious baseline: nonflexible load plus groups already placed.
    PowerVector stacked = state.baseline.power();
    for (std::size_t i = 0; i < idx(a); ++i) stacked[i] += state.realized[i];

    ArrivalPlan plan{a, Schedule(state.grid), 0.0};
    for (const auto& [d, kwh] : state.remaining) {
        const std::span<const double> window(stacked.data() + idx(a),
                                             static_cast<std::size_t>(d - a + 1));
        const WaterFillResult wf = water_fill(kwh, window, delta);
        PowerVector profile(n, 0.0);
        for (std::size_t i = 0; i < wf.charge.size(); ++i) {
            profile[idx(a) + i] = wf.charge[i];
            stacked[idx(a) + i] += wf.charge[i];
        }
        plan.groups.set_profile({a, d}, std::move(profile));
    }
    plan.cost = cost(stacked, f);
    return plan;
}

OnlineState commit(const OnlineState& state, const ArrivalPlan& plan) {
    require(state.last_arrival == plan.arrival, ErrorKind::InvalidArgument,
            "plan does not belong to the state's arrival slot");
    OnlineState next = state;
    next.programmed.clear();
    for (const auto& [key, power] : plan.groups.profiles()) next.programmed[key.departure] = power;
    return next;
}

OnlineTrace run_online(std::span<const ArrivalEvent> events, const BaselineProfile& baseline,
                       const TimeGrid& grid, const QuadraticCost& f) {
    OnlineState state = OnlineState::initial(grid, baseline);
    OnlineTrace trace;
    trace.events.reserve(events.size());
    for (const auto& event : events) {
        try {
            OnlineState context = advance_and_update(state, event);
            ArrivalPlan plan = schedule_arrival(context, f);
            state = commit(context, plan);
            trace.events.push_back({event, std::move(context), std::move(plan)});
        } catch (const Error& e) {
            throw Error(e.kind(), "arrival event at slot " + std::to_string(event.arrival) + ": " + e.what());
        }
    }

    // Execute the last plan through the end of the horizon.
    const double delta = grid.slot_hours();
    trace.realized_charge = state.realized;
    trace.realized_by_departure = state.realized_by_departure;
    if (state.last_arrival) {
        for (const auto& [d, plan] : state.programmed) {
            auto& executed = trace.realized_by_departure[d];
            if (executed.empty()) executed.assign(plan.size(), 0.0);
            double delivered = 0.0;
            for (int t = *state.last_arrival; t <= grid.num_slots(); ++t) {
                trace.realized_charge[idx(t)] += plan[idx(t)];
                executed[idx(t)] += plan[idx(t)];
                delivered += plan[idx(t)];
            }
            const double want = state.remaining.at(d);
            require(std::abs(delta * delivered - want) <= kConservationTol * std::max(1.0, want),
                    ErrorKind::Solver, "departure " + std::to_string(d) + " not fully served");
        }
    }

    trace.total_load = baseline.power();
    for (std::size_t i = 0; i < trace.total_load.size(); ++i) trace.total_load[i] += trace.realized_charge[i];
    trace.cost = cost(trace.total_load, f);
    return trace;
}

std::vector<ArrivalEvent> events_from_demand(const ClassDemand& demand) {
    std::map<int, ArrivalEvent> by_arrival;
    for (const auto& [key, kwh] : demand.entries()) {
        auto& event = by_arrival[key.arrival];
        event.arrival = key.arrival;
        event.new_demands[key.departure] += kwh;
    }
    std::vector<ArrivalEvent> events;
    events.reserve(by_arrival.size());
    for (auto& [a, event] : by_arrival) events.push_back(std::move(event));
    return events;
}

std::string to_json_line(const ArrivalEvent& event) {
    nlohmann::ordered_json demands = nlohmann::ordered_json::object();
    for (const auto& [d, kwh] : event.new_demands) demands[std::to_string(d)] = kwh;
    nlohmann::ordered_json j;
    j["a"] = event.arrival;
    j["demands"] = std::move(demands);
    return j.dump();
}

ArrivalEvent parse_event_json(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("bad event line: ") + e.what());
    }
    require(j.is_object() && j.contains("a") && j["a"].is_number_integer() && j.contains("demands") &&
                j["demands"].is_object(),
            ErrorKind::Config, "event line needs an integer 'a' and a 'demands' object");
    ArrivalEvent event;
    event.arrival = j["a"].get<int>();
    for (const auto& [key, value] : j["demands"].items()) {
        require(value.is_number(), ErrorKind::Config, "event demand for '" + key + "' is not a number");
        int d = 0;
        try {
            std::size_t used = 0;
            d = std::stoi(key, &used);
            require(used == key.size(), ErrorKind::Config, "bad departure key '" + key + "'");
        } catch (const std::logic_error&) {
            fail(ErrorKind::Config, "bad departure key '" + key + "'");
        }
        event.new_demands[d] += value.get<double>();
    }
    return event;
}

std::vector<ArrivalEvent> read_events_jsonl(std::istream& in) {
    std::vector<ArrivalEvent> events;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        events.push_back(parse_event_json(line));
    }
    return events;
}

void write_events_jsonl(std::ostream& out, std::span<const ArrivalEvent> events) {
    for (const auto& event : events) out << to_json_line(event) << '\n';
}

} // namespace evcharge
