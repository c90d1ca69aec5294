#include "evcharge/metrics.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <ostream>
#include <thread>

#include "evcharge/io.hpp"

namespace evcharge {

OverloadStats overload(std::span<const double> online_total, std::span<const double> offline_total,
                       double eps_kw) {
    require(online_total.size() == offline_total.size(), ErrorKind::InvalidArgument,
            "overload: online and offline profiles differ in length");
    OverloadStats stats;
    double excess = 0.0;
    for (std::size_t i = 0; i < online_total.size(); ++i) {
        const double diff = online_total[i] - offline_total[i];
        if (diff > eps_kw) {
            ++stats.overload_slots;
            excess += diff;
        }
    }
    if (stats.overload_slots > 0) stats.avg_overload_kw = excess / stats.overload_slots;
    return stats;
}

double cost_gap_pct(double online_cost, double offline_cost) {
    require(offline_cost > 0.0, ErrorKind::InvalidArgument,
            "cost gap needs a positive offline cost; use a cost function that is positive on the load range");
    return 100.0 * (online_cost - offline_cost) / offline_cost;
}

Comparison compare(const Scenario& scenario, const OfflineOptions& solver, double eps_kw) {
    const auto events = events_from_demand(scenario.demand);
    Comparison result{run_online(events, scenario.baseline, scenario.grid, scenario.cost),
                      solve_offline(scenario.demand, scenario.baseline, scenario.grid, scenario.cost, solver),
                      {}};
    const PowerVector offline_total = total_load(result.offline.schedule, scenario.baseline);
    result.stats = overload(result.online.total_load, offline_total, eps_kw);
    result.stats.cost_gap_pct = cost_gap_pct(result.online.cost, result.offline.optimal_cost);
    return result;
}

std::vector<double> sweep_points(const SweepOptions& options) {
    const double span = options.to_pct - options.from_pct;
    require(options.from_pct > 0.0 && options.to_pct <= 300.0 && span >= 0.0, ErrorKind::InvalidArgument,
            "sweep range must lie within (0, 300]");
    require(options.step_pct > 0.0, ErrorKind::InvalidArgument, "sweep step must be positive");
    const double count = span / options.step_pct;
    const long steps = std::lround(count);
    require(std::abs(count - static_cast<double>(steps)) < 1e-9, ErrorKind::InvalidArgument,
            "sweep step must divide the range");
    std::vector<double> points;
    for (long i = 0; i <= steps; ++i) points.push_back(options.from_pct + static_cast<double>(i) * options.step_pct);
    return points;
}

namespace {

SweepRow sweep_point(const Scenario& base, double pct, const SweepOptions& options) {
    const Scenario scenario = base.with_variance(pct);
    const SlotPmfs pmfs = discretize_distributions(*scenario.commute, scenario.grid);
    const Comparison cmp = compare(scenario, options.pricing.solver, options.eps_kw);

    SweepRow row;
    row.variance_pct = pct;
    row.stats = cmp.stats;
    row.online_cost = cmp.online.cost;
    row.offline_cost = cmp.offline.optimal_cost;
    row.arrival_support = support(pmfs.arrival);
    row.departure_support = support(pmfs.departure);
    row.online_prices.regime = Regime::Online;
    if (options.with_prices) {
        row.online_prices = online_prices(cmp.online, scenario.cost, options.pricing);
        row.offline_prices = offline_cup(scenario.demand, scenario.baseline, scenario.grid, scenario.cost,
                                         options.pricing);
    }
    return row;
}

} // namespace

std::vector<SweepRow> variance_sweep(const Scenario& scenario, const SweepOptions& options) {
    require(scenario.commute.has_value(), ErrorKind::Config, "variance sweep needs a commute scenario");
    const std::vector<double> points = sweep_points(options);
    std::vector<SweepRow> rows(points.size());
    std::vector<std::exception_ptr> errors(points.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                rows[i] = sweep_point(scenario, points[i], options);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(points.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const Error& e) {
            throw Error(e.kind(), "sweep point " + io::number(points[i]) + "%: " + e.what());
        }
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "variance_pct,overload_slots,avg_overload_kw,cost_gap_pct" << io::kEol;
    for (const auto& row : rows) {
        out << io::number(row.variance_pct) << ',' << row.stats.overload_slots << ','
            << io::number(row.stats.avg_overload_kw) << ',' << io::number(row.stats.cost_gap_pct) << io::kEol;
    }
}

} // namespace evcharge
