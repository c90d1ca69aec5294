#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace oracle {

std::vector<double> bisection_water_fill(double energy_kwh, const std::vector<double>& baseline, double slot_hours,
                                         double* level) {
    const double lo0 = *std::min_element(baseline.begin(), baseline.end());
    const double hi0 = *std::max_element(baseline.begin(), baseline.end()) + energy_kwh / slot_hours;
    auto delivered = [&](double tau) {
        double sum = 0.0;
        for (double b : baseline) sum += std::max(0.0, tau - b);
        return slot_hours * sum;
    };
    double lo = lo0, hi = hi0;
    for (int i = 0; i < 200 && hi > lo; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (delivered(mid) < energy_kwh ? lo : hi) = mid;
    }
    const double tau = 0.5 * (lo + hi);
    if (level) *level = tau;
    std::vector<double> charge;
    for (double b : baseline) charge.push_back(energy_kwh == 0.0 ? 0.0 : std::max(0.0, tau - b));
    return charge;
}

std::vector<double> project_simplex(const std::vector<double>& y, double total) {
    if (total <= 0.0) return std::vector<double>(y.size(), 0.0);
    auto mass = [&](double shift) {
        double s = 0.0;
        for (double v : y) s += std::max(0.0, v - shift);
        return s;
    };
    double lo = *std::min_element(y.begin(), y.end()) - total;
    double hi = *std::max_element(y.begin(), y.end());
    for (int i = 0; i < 300; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (mass(mid) > total ? lo : hi) = mid;
    }
    const double shift = 0.5 * (lo + hi);
    std::vector<double> x;
    for (double v : y) x.push_back(std::max(0.0, v - shift));
    // Remove the residual bisection error so the energy constraint holds exactly enough.
    const double s = std::accumulate(x.begin(), x.end(), 0.0);
    if (s > 0.0) for (double& v : x) v *= total / s;
    return x;
}

namespace {

double objective(const PgProblem& p, const std::vector<std::vector<double>>& x) {
    double c = 0.0;
    for (std::size_t t = 0; t < p.fixed_load.size(); ++t) {
        double load = p.fixed_load[t];
        for (const auto& xk : x) load += xk[t];
        c += p.f(load);
    }
    return c;
}

} // namespace

PgResult projected_gradient(const PgProblem& p, int max_iterations, double tol) {
    const std::size_t T = p.fixed_load.size();
    PgResult r;
    for (const auto& b : p.blocks) {
        std::vector<double> x(T, 0.0);
        const int w = b.last - b.first + 1;
        for (int t = b.first; t <= b.last; ++t) x[static_cast<std::size_t>(t - 1)] = b.energy_kwh / p.slot_hours / w;
        r.power.push_back(std::move(x));
    }
    const double lipschitz = std::max(2.0 * p.f.quad * static_cast<double>(std::max<std::size_t>(1, p.blocks.size())), 1e-12);
    const double step = 1.0 / lipschitz;

    std::vector<double> load(T);
    for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
        for (std::size_t t = 0; t < T; ++t) {
            load[t] = p.fixed_load[t];
            for (const auto& xk : r.power) load[t] += xk[t];
        }
        double change = 0.0;
        std::vector<std::vector<double>> next = r.power;
        for (std::size_t k = 0; k < p.blocks.size(); ++k) {
            const auto& b = p.blocks[k];
            std::vector<double> y;
            for (int t = b.first; t <= b.last; ++t) {
                const auto i = static_cast<std::size_t>(t - 1);
                y.push_back(r.power[k][i] - step * p.f.derivative(load[i]));
            }
            const auto x = project_simplex(y, b.energy_kwh / p.slot_hours);
            for (int t = b.first; t <= b.last; ++t) {
                const auto i = static_cast<std::size_t>(t - 1);
                const double v = x[static_cast<std::size_t>(t - b.first)];
                change = std::max(change, std::abs(v - r.power[k][i]));
                next[k][i] = v;
            }
        }
        r.power = std::move(next);
        if (change < tol) {
            r.converged = true;
            break;
        }
    }
    r.cost = objective(p, r.power);
    return r;
}

double slot_hours_choice(Rng& rng) {
    static const double choices[] = {0.25, 0.5, 1.0, 2.0};
    return choices[rng.integer(0, 3)];
}

RandomInstance random_instance(Rng& rng, int max_slots, int max_classes) {
    const int T = rng.integer(1, max_slots);
    const double delta = slot_hours_choice(rng);
    std::vector<double> base;
    for (int t = 0; t < T; ++t) base.push_back(rng.uniform(-10.0, 10.0));
    evcharge::BaselineProfile baseline(base);
    evcharge::QuadraticCost f = evcharge::QuadraticCost::for_baseline(baseline, rng.uniform(0.2, 2.0));
    f.lin += rng.uniform(0.0, 5.0);
    evcharge::ClassDemand demand;
    const int classes = rng.integer(1, max_classes);
    for (int k = 0; k < classes; ++k) {
        const int a = rng.integer(1, T);
        const int d = rng.integer(a, T);
        demand.set({a, d}, rng.uniform(0.0, 50.0));
    }
    return {evcharge::TimeGrid(T, delta), baseline, f, demand};
}

std::vector<evcharge::ArrivalEvent> random_events(Rng& rng, const evcharge::TimeGrid& grid, int max_departures) {
    const int T = grid.num_slots();
    std::set<int> pool;
    const int wanted = rng.integer(1, max_departures);
    for (int i = 0; i < wanted; ++i) pool.insert(rng.integer(1, T));
    std::vector<evcharge::ArrivalEvent> events;
    int a = 1;
    const int count = rng.integer(1, 3);
    for (int e = 0; e < count && a <= T; ++e) {
        a = rng.integer(a, T);
        evcharge::ArrivalEvent ev{a, {}};
        for (int d : pool) {
            if (d >= a && rng.coin(0.7)) ev.new_demands[d] = rng.uniform(0.0, 50.0);
        }
        if (!ev.new_demands.empty()) events.push_back(ev);
        ++a;
    }
    return events;
}

} // namespace oracle
