#pragma once

// Charging unit prices: marginal operator cost per kWh of a class's need,
// obtained by central finite differences on re-solved instances.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "evcharge/model.hpp"
#include "evcharge/offline.hpp"
#include "evcharge/online.hpp"

namespace evcharge {

enum class Regime { Offline, Online };

std::string_view to_string(Regime regime);
Regime parse_regime(const std::string& text);

struct PriceTable {
    Regime regime = Regime::Offline;
    std::map<EVClassKey, double> entries; ///< price per kWh
    /// Factor the raw prices were divided by, when normalized for reporting.
    std::optional<double> normalization;
};

struct PricingOptions {
    /// Fixed finite-difference step, kWh. Unset: max(1e-3, 1e-4 * L) per class.
    std::optional<double> fd_step_kwh;
    OfflineOptions solver;
};

/// Step used for a class with energy need `kwh`.
double fd_step(double kwh, const PricingOptions& options);

/// Prices from the full-information optimum. Forward difference for classes
/// whose need is below the step. Solver failures are rethrown naming the class.
PriceTable offline_cup(const ClassDemand& demand, const BaselineProfile& baseline, const TimeGrid& grid,
                       const QuadraticCost& f, const PricingOptions& options = {});

/// Prices issued at one arrival: derivative of the arrival's planned cost with
/// respect to each new class need, all other remaining needs held fixed.
/// `context` is the state after advance_and_update for that arrival.
PriceTable online_cup(const OnlineState& context, const ArrivalEvent& event, const QuadraticCost& f,
                      const PricingOptions& options = {});

/// Online prices for every class in a trace, each computed at its own arrival.
PriceTable online_prices(const OnlineTrace& trace, const QuadraticCost& f,
                         const PricingOptions& options = {});

struct AnalyticCheck {
    bool skipped = false; ///< class has no positive charge in the solution
    double residual = 0.0;
    double marginal = 0.0; ///< f'(total load) / slot_hours at the class's largest charge slot
};

/// Envelope cross-check of a finite-difference price against the marginal
/// cost f'(total load) / slot_hours on a slot where the class charges.
AnalyticCheck analytic_check(double price, EVClassKey key, const Schedule& schedule,
                             std::span<const double> total_load, const QuadraticCost& f);

/// Divides every table by the largest entry across all of them.
void normalize(std::span<PriceTable> tables);

/// CSV columns: a,d,lambda,regime,variance_pct
void write_price_csv_header(std::ostream& out);
void write_price_rows(std::ostream& out, const PriceTable& table, double variance_pct);

} // namespace evcharge
