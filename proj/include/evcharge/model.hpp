#pragma once

// Core domain types for aggregated EV charging schedules.
//
// Units are fixed throughout the library: energy in kWh, power in kW, slot
// duration in hours. Slot indices are 1-based (1..T) wherever they appear in
// the public API; power vectors are 0-based, so slot t lives at index t - 1.

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evcharge/error.hpp"

namespace evcharge {

using PowerVector = std::vector<double>;

/// Relative tolerance used for energy conservation and nonnegativity checks.
inline constexpr double kConservationTol = 1e-9;

class TimeGrid {
public:
    TimeGrid(int num_slots, double slot_hours, std::vector<std::string> labels = {});

    /// Grid whose labels are wall-clock times "HH:MM" starting at `start_label`.
    static TimeGrid with_clock_labels(int num_slots, double slot_hours,
                                      const std::string& start_label);

    int num_slots() const noexcept { return num_slots_; }
    double slot_hours() const noexcept { return slot_hours_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    /// Wall-clock label of a slot, or its index when the grid has no labels.
    std::string label(int slot) const;
    /// Start of slot 1 in hours after midnight (0 when unlabeled).
    double start_hour() const noexcept { return start_hour_; }

    bool contains(int slot) const noexcept { return slot >= 1 && slot <= num_slots_; }

    bool operator==(const TimeGrid& other) const = default;

private:
    int num_slots_;
    double slot_hours_;
    std::vector<std::string> labels_;
    double start_hour_ = 0.0;
};

/// Parses "HH:MM" into hours after midnight.
double parse_clock(const std::string& label);
std::string format_clock(double hours);

/// EV class (a, d): arrives at the start of slot a, leaves at the end of slot d.
struct EVClassKey {
    int arrival = 1;
    int departure = 1;

    int window_length() const noexcept { return departure - arrival + 1; }
    bool valid_for(const TimeGrid& grid) const noexcept {
        return arrival >= 1 && arrival <= departure && departure <= grid.num_slots();
    }

    auto operator<=>(const EVClassKey&) const = default;
};

std::string to_string(const EVClassKey& key);

/// Aggregated energy need per class, kWh.
class ClassDemand {
public:
    ClassDemand() = default;

    /// Adds energy to a class; repeated keys accumulate.
    void add(EVClassKey key, double kwh);
    void set(EVClassKey key, double kwh);

    double at(EVClassKey key) const;
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }
    double total_kwh() const;

    const std::map<EVClassKey, double>& entries() const noexcept { return entries_; }

    void validate(const TimeGrid& grid) const;

private:
    std::map<EVClassKey, double> entries_;
};

/// Nonflexible power per slot, kW. Negative values mean net local generation.
class BaselineProfile {
public:
    explicit BaselineProfile(PowerVector power);
    static BaselineProfile zeros(int num_slots);

    const PowerVector& power() const noexcept { return power_; }
    std::size_t size() const noexcept { return power_.size(); }
    double operator[](std::size_t i) const { return power_[i]; }
    double min() const;

    void validate(const TimeGrid& grid) const;

private:
    PowerVector power_;
};

/// f(x) = quad * x^2 + lin * x + constant, applied to the total load of a slot.
struct QuadraticCost {
    double quad = 0.5;
    double lin = 0.0;
    double constant = 0.0;
    /// Total-load interval on which f must be nondecreasing.
    double range_min = 0.0;
    double range_max = 0.0;

    double operator()(double x) const noexcept { return (quad * x + lin) * x + constant; }
    double derivative(double x) const noexcept { return 2.0 * quad * x + lin; }

    void validate() const;

    /// Default operator cost for a site: nondecreasing and nonnegative on every
    /// total load the baseline allows, f(x) = quad * (x + m)^2 with
    /// m = max(0, -min baseline).
    static QuadraticCost for_baseline(const BaselineProfile& baseline, double quad = 0.5);
};

/// Per-key aggregated charging power. Each profile spans the whole horizon
/// and is zero outside [arrival, departure]. Keys are EV classes for offline
/// solutions and (arrival event, departure) groups for online plans.
class Schedule {
public:
    explicit Schedule(TimeGrid grid) : grid_(std::move(grid)) {}

    const TimeGrid& grid() const noexcept { return grid_; }
    const std::map<EVClassKey, PowerVector>& profiles() const noexcept { return profiles_; }
    bool empty() const noexcept { return profiles_.empty(); }

    void set_profile(EVClassKey key, PowerVector power);
    const PowerVector& profile(EVClassKey key) const;
    bool contains(EVClassKey key) const { return profiles_.contains(key); }

    /// Delivered energy, kWh.
    double energy_kwh(EVClassKey key) const;

    /// Checks nonnegativity, zero-outside-window and per-key conservation
    /// against `demand` (every demand key must be scheduled).
    void check(const ClassDemand& demand, double rel_tol = kConservationTol) const;

private:
    TimeGrid grid_;
    std::map<EVClassKey, PowerVector> profiles_;
};

/// Baseline plus every scheduled profile, per slot.
PowerVector total_load(const Schedule& schedule, const BaselineProfile& baseline);

/// Sum of f over the slots of a load vector.
double cost(std::span<const double> load, const QuadraticCost& f);

} // namespace evcharge
