#include "evcharge/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace evcharge {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::Solver: return "solver";
    case ErrorKind::Infeasible: return "infeasible";
    }
    return "unknown";
}

double parse_clock(const std::string& label) {
    int hh = 0;
    int mm = 0;
    char tail = 0;
    if (std::sscanf(label.c_str(), "%d:%d%c", &hh, &mm, &tail) != 2 || hh < 0 || hh > 48 ||
        mm < 0 || mm >= 60) {
        fail(ErrorKind::InvalidArgument, "bad wall-clock label '" + label + "', expected HH:MM");
    }
    return hh + mm / 60.0;
}

std::string format_clock(double hours) {
    long minutes = std::lround(hours * 60.0);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%02ld:%02ld", minutes / 60, minutes % 60);
    return buf;
}

TimeGrid::TimeGrid(int num_slots, double slot_hours, std::vector<std::string> labels)
    : num_slots_(num_slots), slot_hours_(slot_hours), labels_(std::move(labels)) {
    require(num_slots_ >= 1, ErrorKind::InvalidArgument, "time grid needs at least one slot");
    require(std::isfinite(slot_hours_) && slot_hours_ > 0.0, ErrorKind::InvalidArgument,
            "slot duration must be positive");
    require(labels_.empty() || static_cast<int>(labels_.size()) == num_slots_,
            ErrorKind::InvalidArgument, "slot label count must equal the number of slots");
    if (!labels_.empty()) start_hour_ = parse_clock(labels_.front());
}

TimeGrid TimeGrid::with_clock_labels(int num_slots, double slot_hours,
                                     const std::string& start_label) {
    const double start = parse_clock(start_label);
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(std::max(num_slots, 0)));
    for (int t = 0; t < num_slots; ++t) labels.push_back(format_clock(start + t * slot_hours));
    return TimeGrid(num_slots, slot_hours, std::move(labels));
}

std::string TimeGrid::label(int slot) const {
    if (!labels_.empty() && contains(slot)) return labels_[static_cast<std::size_t>(slot - 1)];
    return std::to_string(slot);
}

std::string to_string(const EVClassKey& key) {
    return "(" + std::to_string(key.arrival) + "," + std::to_string(key.departure) + ")";
}

void ClassDemand::add(EVClassKey key, double kwh) {
    require(std::isfinite(kwh) && kwh >= 0.0, ErrorKind::InvalidArgument,
            "class " + to_string(key) + " has a negative or non-finite energy need");
    entries_[key] += kwh;
}

void ClassDemand::set(EVClassKey key, double kwh) {
    require(std::isfinite(kwh) && kwh >= 0.0, ErrorKind::InvalidArgument,
            "class " + to_string(key) + " has a negative or non-finite energy need");
    entries_[key] = kwh;
}

double ClassDemand::at(EVClassKey key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0.0 : it->second;
}

double ClassDemand::total_kwh() const {
    double total = 0.0;
    for (const auto& [key, kwh] : entries_) total += kwh;
    return total;
}

void ClassDemand::validate(const TimeGrid& grid) const {
    for (const auto& [key, kwh] : entries_) {
        require(key.valid_for(grid), ErrorKind::InvalidArgument,
                "class " + to_string(key) + " does not fit the time grid");
        require(std::isfinite(kwh) && kwh >= 0.0, ErrorKind::InvalidArgument,
                "class " + to_string(key) + " has a negative energy need");
    }
}

BaselineProfile::BaselineProfile(PowerVector power) : power_(std::move(power)) {
    for (double p : power_) {
        require(std::isfinite(p), ErrorKind::InvalidArgument, "baseline contains a non-finite value");
    }
}

BaselineProfile BaselineProfile::zeros(int num_slots) {
    return BaselineProfile(PowerVector(static_cast<std::size_t>(num_slots), 0.0));
}

double BaselineProfile::min() const {
    return power_.empty() ? 0.0 : *std::min_element(power_.begin(), power_.end());
}

void BaselineProfile::validate(const TimeGrid& grid) const {
    require(static_cast<int>(power_.size()) == grid.num_slots(), ErrorKind::InvalidArgument,
            "baseline has " + std::to_string(power_.size()) + " slots, grid has " +
                std::to_string(grid.num_slots()));
}

void QuadraticCost::validate() const {
    require(std::isfinite(quad) && std::isfinite(lin) && std::isfinite(constant),
            ErrorKind::InvalidArgument, "cost coefficients must be finite");
    require(quad >= 0.0, ErrorKind::InvalidArgument, "cost must be convex (quad >= 0)");
    require(range_min <= range_max, ErrorKind::InvalidArgument, "empty cost validity range");
    // Linear part of f' is nondecreasing, so checking the left end suffices.
    require(derivative(range_min) >= -1e-12 * std::max(1.0, std::abs(lin)),
            ErrorKind::InvalidArgument, "cost must be nondecreasing on its validity range");
}

QuadraticCost QuadraticCost::for_baseline(const BaselineProfile& baseline, double quad) {
    const double shift = std::max(0.0, -baseline.min());
    QuadraticCost f;
    f.quad = quad;
    f.lin = 2.0 * quad * shift;
    f.constant = quad * shift * shift;
    f.range_min = -shift;
    f.range_max = std::numeric_limits<double>::infinity();
    return f;
}

void Schedule::set_profile(EVClassKey key, PowerVector power) {
    require(key.valid_for(grid_), ErrorKind::InvalidArgument,
            "schedule key " + to_string(key) + " does not fit the time grid");
    require(static_cast<int>(power.size()) == grid_.num_slots(), ErrorKind::InvalidArgument,
            "profile length must equal the number of slots");
    profiles_[key] = std::move(power);
}

const PowerVector& Schedule::profile(EVClassKey key) const {
    auto it = profiles_.find(key);
    require(it != profiles_.end(), ErrorKind::InvalidArgument,
            "no profile for class " + to_string(key));
    return it->second;
}

double Schedule::energy_kwh(EVClassKey key) const {
    const auto& p = profile(key);
    return grid_.slot_hours() * std::accumulate(p.begin(), p.end(), 0.0);
}

void Schedule::check(const ClassDemand& demand, double rel_tol) const {
    for (const auto& [key, kwh] : demand.entries()) {
        require(profiles_.contains(key), ErrorKind::Solver, "class " + to_string(key) + " not scheduled");
    }
    for (const auto& [key, power] : profiles_) {
        double peak = 0.0;
        for (double p : power) peak = std::max(peak, std::abs(p));
        for (int t = 1; t <= grid_.num_slots(); ++t) {
            const double p = power[static_cast<std::size_t>(t - 1)];
            const bool inside = t >= key.arrival && t <= key.departure;
            require(std::isfinite(p), ErrorKind::Solver, "non-finite power for " + to_string(key));
            require(p >= -rel_tol * std::max(1.0, peak), ErrorKind::Solver,
                    "negative power for " + to_string(key) + " at slot " + std::to_string(t));
            require(inside || p == 0.0, ErrorKind::Solver,
                    "power outside window for " + to_string(key) + " at slot " + std::to_string(t));
        }
        const double want = demand.at(key);
        const double got = energy_kwh(key);
        require(std::abs(got - want) <= rel_tol * std::max(1.0, want), ErrorKind::Solver,
                "energy mismatch for " + to_string(key) + ": delivered " + std::to_string(got) +
                    " kWh, need " + std::to_string(want) + " kWh");
    }
}

PowerVector total_load(const Schedule& schedule, const BaselineProfile& baseline) {
    baseline.validate(schedule.grid());
    PowerVector total = baseline.power();
    for (const auto& [key, power] : schedule.profiles()) {
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += power[i];
    }
    return total;
}

double cost(std::span<const double> load, const QuadraticCost& f) {
    double sum = 0.0;
    for (double x : load) {
        require(std::isfinite(x), ErrorKind::InvalidArgument, "load contains a non-finite value");
        sum += f(x);
    }
    return sum;
}

} // namespace evcharge
