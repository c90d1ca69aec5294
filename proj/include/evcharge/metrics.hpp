#pragma once

// Online-versus-offline comparison statistics and the variance sweep.

#include <iosfwd>
#include <span>
#include <vector>

#include "evcharge/offline.hpp"
#include "evcharge/online.hpp"
#include "evcharge/pricing.hpp"
#include "evcharge/scenario.hpp"

namespace evcharge {

struct OverloadStats {
    int overload_slots = 0;
    double avg_overload_kw = 0.0;
    /// 100 * (online cost - offline cost) / offline cost
    double cost_gap_pct = 0.0;
};

/// Slots where the online total exceeds the offline total by more than
/// `eps_kw`, and the mean excess over those slots (0 when there are none).
/// cost_gap_pct is left at 0; see cost_gap_pct().
OverloadStats overload(std::span<const double> online_total, std::span<const double> offline_total,
                       double eps_kw = 1e-6);

double cost_gap_pct(double online_cost, double offline_cost);

/// Both regimes solved on the same scenario.
struct Comparison {
    OnlineTrace online;
    OfflineSolution offline;
    OverloadStats stats;
};

Comparison compare(const Scenario& scenario, const OfflineOptions& solver = {}, double eps_kw = 1e-6);

struct SweepOptions {
    double from_pct = 100.0;
    double to_pct = 300.0;
    double step_pct = 25.0;
    bool with_prices = true;
    PricingOptions pricing;
    double eps_kw = 1e-6;
    /// Worker threads; points are independent and output keeps scale order.
    int jobs = 1;
};

struct SweepRow {
    double variance_pct = 0.0;
    OverloadStats stats;
    double online_cost = 0.0;
    double offline_cost = 0.0;
    std::vector<int> arrival_support;
    std::vector<int> departure_support;
    PriceTable online_prices;
    PriceTable offline_prices;
};

/// Scale values from `from_pct` to `to_pct` inclusive. Throws when the step
/// does not divide the range or the range leaves (0, 300].
std::vector<double> sweep_points(const SweepOptions& options);

std::vector<SweepRow> variance_sweep(const Scenario& scenario, const SweepOptions& options);

/// CSV columns: variance_pct,overload_slots,avg_overload_kw,cost_gap_pct
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

} // namespace evcharge
