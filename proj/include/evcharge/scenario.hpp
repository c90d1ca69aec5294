#pragma once

// Commuting workplace scenario: discretized normal arrival/departure times,
// aggregated class demand and a PV-only nonflexible profile.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evcharge/model.hpp"

namespace evcharge {

/// How the configured spreads are read.
enum class SpreadReading {
    StdDev,   ///< spread is a standard deviation in minutes
    Variance, ///< spread is a variance in minutes^2
};

/// How a variance scale k acts on the standard deviation.
enum class SpreadScaling {
    SqrtOfScale, ///< sigma * sqrt(k): the variance is multiplied by k
    Linear,      ///< sigma * k
};

/// Which time interval is credited to a slot.
enum class BinAlignment {
    /// Mass within half a slot of the arrival (slot start) or departure
    /// (slot end) instant, i.e. times rounded to the nearest slot boundary.
    Centered,
    /// Mass falling inside slot a (arrivals) or slot d + 1 (departures).
    SlotEdges,
};

struct CommuteConfig {
    double n_evs = 100.0;
    double per_ev_kwh = 6.0;
    double arrival_mean_h = 8.0;
    double departure_mean_h = 18.0;
    double arrival_spread_min = 22.0;
    double departure_spread_min = 45.0;
    double variance_pct = 100.0;
    SpreadReading reading = SpreadReading::StdDev;
    SpreadScaling scaling = SpreadScaling::Linear;
    BinAlignment bins = BinAlignment::Centered;
    /// Slot probabilities below this are dropped before renormalizing.
    double support_floor = 0.04;
    /// Rescale counts to n_evs after dropping classes with a > d.
    bool renormalize_dropped = true;

    double arrival_sigma_h() const;
    double departure_sigma_h() const;
    void validate(const TimeGrid& grid) const;
};

struct SlotPmfs {
    /// arrival[a - 1]: probability of arriving at the start of slot a.
    std::vector<double> arrival;
    /// departure[d - 1]: probability of leaving at the end of slot d.
    std::vector<double> departure;
};

SlotPmfs discretize_distributions(const CommuteConfig& config, const TimeGrid& grid);

/// Slots with positive probability, ascending.
std::vector<int> support(const std::vector<double>& pmf);

/// Class counts N * p_arr(a) * p_dep(d) over a <= d, scaled by the per-EV need.
ClassDemand build_demand(const CommuteConfig& config, const SlotPmfs& pmfs, const TimeGrid& grid);

/// Error raised by PV CSV ingestion, with the specific defect.
class PvFormatError : public Error {
public:
    enum class Reason { MissingColumn, RowCount, Unparseable, NegativeValue };

    PvFormatError(Reason reason, const std::string& message)
        : Error(ErrorKind::Config, message), reason_(reason) {}
    Reason reason() const noexcept { return reason_; }

private:
    Reason reason_;
};

/// Parses a PV CSV with a header row and either a `kw` column (generation in
/// kW) or a `cf` column (capacity factor scaled by `peak_kw`). Returns the
/// baseline, i.e. the negated generation.
BaselineProfile parse_pv_csv(const std::string& text, const TimeGrid& grid, double peak_kw);
BaselineProfile load_pv_csv(const std::filesystem::path& path, const TimeGrid& grid, double peak_kw);

/// A fully specified instance, as loaded from a scenario config.
struct Scenario {
    TimeGrid grid;
    BaselineProfile baseline;
    QuadraticCost cost;
    ClassDemand demand;
    /// Set for commute scenarios; demand is then derived from it.
    std::optional<CommuteConfig> commute;
    /// PV file the baseline came from, if any.
    std::optional<std::filesystem::path> pv_path;
    double pv_peak_kw = 560.0;
    /// Whether the cost was derived from the baseline rather than given.
    bool auto_cost = true;
    double auto_cost_quad = 0.5;

    /// Copy with a different variance scale; rebuilds the demand.
    Scenario with_variance(double variance_pct) const;
};

/// Loads a JSON scenario config. Relative CSV paths resolve against the
/// config's directory; `pv_override` replaces the configured CSV path.
Scenario load_scenario(const std::filesystem::path& path,
                       const std::optional<std::filesystem::path>& pv_override = std::nullopt);
Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir,
                        const std::optional<std::filesystem::path>& pv_override = std::nullopt);

/// Six two-hour slots from 08:00 with five classes (1,1), (1,2), (1,3),
/// (4,6), (5,5): EVs charge around an office load, and the late (5,5)
/// arrival forces (4,6) to be pushed to the last slot by the online plan.
Scenario toy_instance();

} // namespace evcharge
