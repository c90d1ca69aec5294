#include "evcharge/offline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "evcharge/waterfill.hpp"

namespace evcharge {

namespace {

std::size_t idx(int slot) { return static_cast<std::size_t>(slot - 1); }

void validate_inputs(const ClassDemand& demand, const BaselineProfile& baseline, const TimeGrid& grid,
                     const QuadraticCost& f) {
    demand.validate(grid);
    baseline.validate(grid);
    f.validate();
}

PowerVector load_of(const BaselineProfile& baseline, const std::vector<PowerVector>& profiles) {
    PowerVector total = baseline.power();
    for (const auto& p : profiles) {
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += p[i];
    }
    return total;
}

} // namespace

KktReport kkt_check(const Schedule& schedule, const BaselineProfile& baseline, const QuadraticCost& f,
                    std::span<const double> extra_load) {
    PowerVector total = total_load(schedule, baseline);
    if (!extra_load.empty()) {
        require(extra_load.size() == total.size(), ErrorKind::InvalidArgument,
                "kkt_check: extra load has the wrong length");
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += extra_load[i];
    }
    double scale = 1.0;
    for (double x : total) scale = std::max(scale, std::abs(f.derivative(x)));

    KktReport report;
    for (const auto& [key, power] : schedule.profiles()) {
        double peak = 0.0;
        for (int t = key.arrival; t <= key.departure; ++t) peak = std::max(peak, power[idx(t)]);
        const double threshold = 1e-12 * std::max(1.0, peak);

        double multiplier = std::numeric_limits<double>::infinity();
        for (int t = key.arrival; t <= key.departure; ++t) {
            multiplier = std::min(multiplier, f.derivative(total[idx(t)]));
        }
        double residual = 0.0;
        for (int t = key.arrival; t <= key.departure; ++t) {
            if (power[idx(t)] > threshold) {
                residual = std::max(residual, (f.derivative(total[idx(t)]) - multiplier) / scale);
            }
        }
        report.multipliers[key] = multiplier;
        report.residuals[key] = residual;
        report.max_residual = std::max(report.max_residual, residual);
    }
    return report;
}

OfflineSolution solve_offline(const ClassDemand& demand, const BaselineProfile& baseline,
                              const TimeGrid& grid, const QuadraticCost& f,
                              const OfflineOptions& options) {
    validate_inputs(demand, baseline, grid, f);
    require(options.max_sweeps >= 1 && options.max_change_kw > 0.0, ErrorKind::InvalidArgument,
            "solve_offline: bad solver options");

    const double delta = grid.slot_hours();
    const auto n = static_cast<std::size_t>(grid.num_slots());

    std::vector<EVClassKey> keys;
    std::vector<double> energy;
    for (const auto& [key, kwh] : demand.entries()) {
        keys.push_back(key);
        energy.push_back(kwh);
    }
    std::vector<std::size_t> order(keys.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (options.order == SweepOrder::Descending) std::reverse(order.begin(), order.end());

    // Uniform spread over each window to start.
    std::vector<PowerVector> profiles(keys.size(), PowerVector(n, 0.0));
    for (std::size_t c = 0; c < keys.size(); ++c) {
        const double per_slot = energy[c] / delta / keys[c].window_length();
        for (int t = keys[c].arrival; t <= keys[c].departure; ++t) profiles[c][idx(t)] = per_slot;
    }

    auto assemble = [&](int iterations, std::vector<double> history) {
        Schedule schedule(grid);
        for (std::size_t c = 0; c < keys.size(); ++c) schedule.set_profile(keys[c], profiles[c]);
        const PowerVector total = load_of(baseline, profiles);
        OfflineSolution solution{std::move(schedule), cost(total, f), iterations, 0.0, std::move(history)};
        solution.kkt_residual = kkt_check(solution.schedule, baseline, f).max_residual;
        return solution;
    };

    std::vector<double> history;
    PowerVector other(n);
    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        PowerVector total = load_of(baseline, profiles);
        double max_change = 0.0;
        for (std::size_t c : order) {
            const EVClassKey key = keys[c];
            const std::size_t first = idx(key.arrival);
            const auto width = static_cast<std::size_t>(key.window_length());
            auto& profile = profiles[c];
            for (std::size_t i = first; i < first + width; ++i) other[i] = total[i] - profile[i];

            const WaterFillResult wf =
                water_fill(energy[c], std::span<const double>(other.data() + first, width), delta);
            for (std::size_t i = 0; i < width; ++i) {
                max_change = std::max(max_change, std::abs(wf.charge[i] - profile[first + i]));
                profile[first + i] = wf.charge[i];
                total[first + i] = other[first + i] + wf.charge[i];
            }
        }
        history.push_back(cost(load_of(baseline, profiles), f));
        if (max_change < options.max_change_kw) return assemble(sweep, std::move(history));
    }

    OfflineSolution best = assemble(options.max_sweeps, std::move(history));
    throw OfflineNotConverged("offline solver did not converge in " + std::to_string(options.max_sweeps) +
                                  " sweeps (KKT residual " + std::to_string(best.kkt_residual) + ")",
                              std::move(best));
}

double brute_force_oracle(const ClassDemand& demand, const BaselineProfile& baseline,
                          const TimeGrid& grid, const QuadraticCost& f, int steps_per_slot) {
    validate_inputs(demand, baseline, grid, f);
    require(steps_per_slot >= 1 && steps_per_slot <= 50, ErrorKind::InvalidArgument,
            "brute_force_oracle: steps_per_slot must be in [1, 50]");
    int variables = 0;
    for (const auto& [key, kwh] : demand.entries()) variables += key.window_length();
    require(variables <= 8, ErrorKind::InvalidArgument,
            "brute_force_oracle: instance too large (" + std::to_string(variables) + " variables > 8)");

    struct Block {
        std::size_t first;
        std::size_t width;
        double quantum; // kW per step
    };
    std::vector<Block> blocks;
    for (const auto& [key, kwh] : demand.entries()) {
        if (kwh == 0.0) continue;
        blocks.push_back({idx(key.arrival), static_cast<std::size_t>(key.window_length()),
                          kwh / grid.slot_hours() / steps_per_slot});
    }

    PowerVector load = baseline.power();
    double best = std::numeric_limits<double>::infinity();

    // Distributes `left` quanta of block b over positions pos.. of its window.
    std::function<void(std::size_t, std::size_t, int)> place = [&](std::size_t b, std::size_t pos, int left) {
        if (b == blocks.size()) {
            double total = 0.0;
            for (double x : load) total += f(x);
            best = std::min(best, total);
            return;
        }
        const Block& block = blocks[b];
        const std::size_t slot = block.first + pos;
        if (pos + 1 == block.width) {
            const double saved = load[slot];
            load[slot] += left * block.quantum;
            place(b + 1, 0, steps_per_slot);
            load[slot] = saved;
            return;
        }
        const double saved = load[slot];
        for (int k = 0; k <= left; ++k) {
            load[slot] = saved + k * block.quantum;
            place(b, pos + 1, left - k);
        }
        load[slot] = saved;
    };
    place(0, 0, steps_per_slot);
    return best;
}

} // namespace evcharge
