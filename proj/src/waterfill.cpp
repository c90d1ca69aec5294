#include "evcharge/waterfill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evcharge {

WaterFillResult water_fill(double energy_kwh, std::span<const double> window_baseline,
                           double slot_hours) {
    require(std::isfinite(energy_kwh) && energy_kwh >= 0.0, ErrorKind::InvalidArgument,
            "water_fill: energy must be finite and nonnegative");
    require(!window_baseline.empty(), ErrorKind::InvalidArgument, "water_fill: empty window");
    require(std::isfinite(slot_hours) && slot_hours > 0.0, ErrorKind::InvalidArgument,
            "water_fill: slot duration must be positive");
    for (double b : window_baseline) {
        require(std::isfinite(b), ErrorKind::InvalidArgument, "water_fill: non-finite baseline");
    }

    const std::size_t n = window_baseline.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t lhs, std::size_t rhs) {
        return window_baseline[lhs] < window_baseline[rhs];
    });

    // Power target over the window, kW x slots.
    const double target = energy_kwh / slot_hours;

    // Fill the k lowest slots; stop at the first k whose level does not
    // reach the next baseline. The last interval is unbounded.
    double prefix = 0.0;
    double level = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        prefix += window_baseline[order[k - 1]];
        level = (target + prefix) / static_cast<double>(k);
        used = k;
        if (k == n || level <= window_baseline[order[k]]) break;
    }

    WaterFillResult result;
    result.level = level;
    result.charge.assign(n, 0.0);
    for (std::size_t i = 0; i < used; ++i) {
        const std::size_t slot = order[i];
        result.charge[slot] = std::max(0.0, level - window_baseline[slot]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (result.charge[i] > 0.0) result.used_slots.push_back(i);
    }
    return result;
}

} // namespace evcharge
