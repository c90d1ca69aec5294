#pragma once

// Online scheduling: the operator learns about EVs only when they plug in and
// re-plans the remaining needs at every arrival slot.

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evcharge/model.hpp"

namespace evcharge {

/// All EVs plugging in at one slot, aggregated by departure slot.
struct ArrivalEvent {
    int arrival = 1;
    std::map<int, double> new_demands; ///< departure slot -> kWh

    bool operator==(const ArrivalEvent&) const = default;
};

struct OnlineState {
    TimeGrid grid;
    BaselineProfile baseline;
    /// Slot of the most recent arrival event, if any.
    std::optional<int> last_arrival;
    /// Energy still to deliver per departure slot. Only positive needs are kept.
    std::map<int, double> remaining;
    /// Current plan per departure slot over the whole horizon (zero before last_arrival).
    std::map<int, PowerVector> programmed;
    /// Charging power already executed; frozen for slots before last_arrival.
    PowerVector realized;
    std::map<int, PowerVector> realized_by_departure;

    static OnlineState initial(TimeGrid grid, BaselineProfile baseline);
};

/// Moves the clock to the event's slot: executes the plan between the
/// previous arrival and this one, updates the remaining needs and adds the
/// new demands. Throws Error(InvalidArgument) for out-of-order or malformed
/// events and Error(Infeasible) when a past departure still has unmet need.
OnlineState advance_and_update(const OnlineState& state, const ArrivalEvent& event);

struct ArrivalPlan {
    int arrival = 1;
    /// Profiles keyed by (arrival, departure) group.
    Schedule groups;
    /// Operator cost over the full horizon, frozen past slots included.
    double cost = 0.0;
};

/// Stacked water-filling over the departure groups in increasing departure
/// order; each group is filled on [a, d] above the baseline plus the groups
/// that leave before it. Requires a state produced by advance_and_update.
ArrivalPlan schedule_arrival(const OnlineState& state, const QuadraticCost& f);

/// Replaces the state's plan with `plan`.
OnlineState commit(const OnlineState& state, const ArrivalPlan& plan);

struct EventRecord {
    ArrivalEvent event;
    /// State right after advance_and_update, i.e. the information available at the arrival.
    OnlineState context;
    ArrivalPlan plan;
};

struct OnlineTrace {
    std::vector<EventRecord> events;
    /// Executed charging power, summed over groups.
    PowerVector realized_charge;
    std::map<int, PowerVector> realized_by_departure;
    /// Baseline plus executed charging.
    PowerVector total_load;
    /// Operator cost on the executed total load.
    double cost = 0.0;
};

/// Folds every event through advance_and_update, schedule_arrival and commit,
/// then executes the last plan to the end of the horizon. Errors are rethrown
/// with the offending arrival slot in the message.
OnlineTrace run_online(std::span<const ArrivalEvent> events, const BaselineProfile& baseline,
                       const TimeGrid& grid, const QuadraticCost& f);

/// One event per arrival slot, merging classes that arrive together.
std::vector<ArrivalEvent> events_from_demand(const ClassDemand& demand);

// JSON lines: {"a": int, "demands": {"d": kwh}}
std::string to_json_line(const ArrivalEvent& event);
ArrivalEvent parse_event_json(const std::string& line);
std::vector<ArrivalEvent> read_events_jsonl(std::istream& in);
void write_events_jsonl(std::ostream& out, std::span<const ArrivalEvent> events);

} // namespace evcharge
