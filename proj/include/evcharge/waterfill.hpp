#pragma once

#include <span>
#include <vector>

#include "evcharge/model.hpp"

namespace evcharge {

struct WaterFillResult {
    /// Charging power per window slot, kW.
    PowerVector charge;
    /// Common total load on the used slots, kW.
    double level = 0.0;
    /// Window positions (0-based) that receive positive charge, ascending.
    std::vector<std::size_t> used_slots;
};

/// Spreads `energy_kwh` over a window so that baseline + charge is as flat as
/// possible: every used slot ends at the same water level and every unused
/// slot already sits at or above it. The minimizer does not depend on the
/// cost function as long as it is increasing and convex.
///
/// The baseline may be in any order. Equal baseline values receive equal
/// charge. Throws Error(InvalidArgument) for a negative energy, an empty
/// window or a non-finite baseline.
WaterFillResult water_fill(double energy_kwh, std::span<const double> window_baseline,
                           double slot_hours);

} // namespace evcharge
