#include "evcharge/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "evcharge/io.hpp"

namespace evcharge {

std::string_view to_string(Regime regime) {
    return regime == Regime::Offline ? "offline" : "online";
}

Regime parse_regime(const std::string& text) {
    if (text == "offline") return Regime::Offline;
    if (text == "online") return Regime::Online;
    fail(ErrorKind::Config, "unknown regime '" + text + "' (expected online or offline)");
}

double fd_step(double kwh, const PricingOptions& options) {
    if (options.fd_step_kwh) {
        require(*options.fd_step_kwh > 0.0, ErrorKind::InvalidArgument, "finite-difference step must be positive");
        return *options.fd_step_kwh;
    }
    return std::max(1e-3, 1e-4 * kwh);
}

namespace {

/// Central difference when the need can absorb a step down, forward otherwise.
template <typename CostAt>
double marginal_cost(double need, double h, CostAt&& cost_at) {
    if (need >= h) return (cost_at(h) - cost_at(-h)) / (2.0 * h);
    return (cost_at(h) - cost_at(0.0)) / h;
}

} // namespace

PriceTable offline_cup(const ClassDemand& demand, const BaselineProfile& baseline, const TimeGrid& grid,
                       const QuadraticCost& f, const PricingOptions& options) {
    PriceTable table{Regime::Offline, {}, std::nullopt};
    for (const auto& [key, kwh] : demand.entries()) {
        const double h = fd_step(kwh, options);
        try {
            table.entries[key] = marginal_cost(kwh, h, [&](double shift) {
                ClassDemand perturbed = demand;
                perturbed.set(key, kwh + shift);
                return solve_offline(perturbed, baseline, grid, f, options.solver).optimal_cost;
            });
        } catch (const Error& e) {
            throw Error(e.kind(), "offline price for class " + to_string(key) + ": " + e.what());
        }
    }
    return table;
}

PriceTable online_cup(const OnlineState& context, const ArrivalEvent& event, const QuadraticCost& f,
                      const PricingOptions& options) {
    require(context.last_arrival == event.arrival, ErrorKind::InvalidArgument,
            "online_cup: context is not positioned at the event's arrival");
    PriceTable table{Regime::Online, {}, std::nullopt};
    for (const auto& [d, kwh] : event.new_demands) {
        const EVClassKey key{event.arrival, d};
        const double h = fd_step(kwh, options);
        try {
            table.entries[key] = marginal_cost(kwh, h, [&](double shift) {
                OnlineState perturbed = context;
                perturbed.remaining[d] += shift;
                return schedule_arrival(perturbed, f).cost;
            });
        } catch (const Error& e) {
            throw Error(e.kind(), "online price for class " + to_string(key) + ": " + e.what());
        }
    }
    return table;
}

PriceTable online_prices(const OnlineTrace& trace, const QuadraticCost& f, const PricingOptions& options) {
    PriceTable all{Regime::Online, {}, std::nullopt};
    for (const auto& record : trace.events) {
        const PriceTable issued = online_cup(record.context, record.event, f, options);
        all.entries.insert(issued.entries.begin(), issued.entries.end());
    }
    return all;
}

AnalyticCheck analytic_check(double price, EVClassKey key, const Schedule& schedule,
                             std::span<const double> total_load, const QuadraticCost& f) {
    AnalyticCheck check;
    if (!schedule.contains(key)) {
        check.skipped = true;
        return check;
    }
    const auto& power = schedule.profile(key);
    require(total_load.size() == power.size(), ErrorKind::InvalidArgument,
            "analytic_check: total load length mismatch");
    std::size_t best = power.size();
    double peak = 0.0;
    for (std::size_t i = 0; i < power.size(); ++i) {
        if (power[i] > peak) {
            peak = power[i];
            best = i;
        }
    }
    if (best == power.size()) {
        check.skipped = true;
        return check;
    }
    check.marginal = f.derivative(total_load[best]) / schedule.grid().slot_hours();
    check.residual = std::abs(price - check.marginal) / std::max(1.0, std::abs(check.marginal));
    return check;
}

void normalize(std::span<PriceTable> tables) {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& table : tables) {
        for (const auto& [key, price] : table.entries) top = std::max(top, price);
    }
    if (!std::isfinite(top)) return;
    require(top > 0.0, ErrorKind::InvalidArgument, "cannot normalize prices whose maximum is not positive");
    for (auto& table : tables) {
        for (auto& [key, price] : table.entries) price /= top;
        table.normalization = top;
    }
}

void write_price_csv_header(std::ostream& out) { out << "a,d,lambda,regime,variance_pct" << io::kEol; }

void write_price_rows(std::ostream& out, const PriceTable& table, double variance_pct) {
    for (const auto& [key, price] : table.entries) {
        out << key.arrival << ',' << key.departure << ',' << io::number(price) << ',' << to_string(table.regime)
            << ',' << io::number(variance_pct) << io::kEol;
    }
}

} // namespace evcharge
