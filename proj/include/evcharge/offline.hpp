#pragma once

// Full-information benchmark: every class is known before the first slot.

#include <optional>
#include <span>
#include <string>

#include "evcharge/model.hpp"

namespace evcharge {

enum class SweepOrder {
    Ascending,  ///< classes visited in (a, d) order
    Descending, ///< reverse order; reaches the same cost, possibly another argmin
};

struct OfflineOptions {
    /// Stop once no class profile moves by more than this between sweeps, kW.
    double max_change_kw = 1e-10;
    int max_sweeps = 200000;
    SweepOrder order = SweepOrder::Ascending;
};

struct OfflineSolution {
    Schedule schedule;
    double optimal_cost = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;
    /// Objective after each sweep.
    std::vector<double> cost_history;
};

/// Raised when the sweep budget runs out; carries the best iterate.
class OfflineNotConverged : public Error {
public:
    OfflineNotConverged(const std::string& message, OfflineSolution best)
        : Error(ErrorKind::Solver, message), best_(std::move(best)) {}
    const OfflineSolution& best() const noexcept { return best_; }

private:
    OfflineSolution best_;
};

/// Per-class KKT report: the multiplier is the smallest marginal cost in the
/// class window; the residual is how far the marginal cost on its charging
/// slots rises above that, relative to max(1, |largest marginal cost|).
struct KktReport {
    std::map<EVClassKey, double> multipliers;
    std::map<EVClassKey, double> residuals;
    double max_residual = 0.0;
};

/// Checks optimality conditions of a schedule against the total load it produces.
/// `extra_load` (optional) is added to the baseline, e.g. frozen past charging.
KktReport kkt_check(const Schedule& schedule, const BaselineProfile& baseline, const QuadraticCost& f,
                    std::span<const double> extra_load = {});

/// Cyclic block-coordinate descent: each class in turn is water-filled against
/// the baseline plus every other class. Throws OfflineNotConverged when the
/// sweep budget runs out.
OfflineSolution solve_offline(const ClassDemand& demand, const BaselineProfile& baseline,
                              const TimeGrid& grid, const QuadraticCost& f,
                              const OfflineOptions& options = {});

/// Exhaustive search over allocations where each class splits its energy in
/// `steps_per_slot` equal quanta. Returns the best grid cost, an upper bound on
/// the true optimum. Limited to 8 class-slot variables and 50 steps.
double brute_force_oracle(const ClassDemand& demand, const BaselineProfile& baseline,
                          const TimeGrid& grid, const QuadraticCost& f, int steps_per_slot);

} // namespace evcharge
