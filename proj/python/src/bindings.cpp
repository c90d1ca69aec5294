#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "evcharge/metrics.hpp"
#include "evcharge/offline.hpp"
#include "evcharge/online.hpp"
#include "evcharge/pricing.hpp"
#include "evcharge/scenario.hpp"
#include "evcharge/waterfill.hpp"

namespace py = pybind11;
using namespace evcharge;

namespace {

using Key = std::pair<int, int>;
using DemandMap = std::map<Key, double>;

ClassDemand to_demand(const DemandMap& m) {
    ClassDemand demand;
    for (const auto& [k, kwh] : m) demand.add({k.first, k.second}, kwh);
    return demand;
}

DemandMap from_demand(const ClassDemand& d) {
    DemandMap m;
    for (const auto& [k, kwh] : d.entries()) m[{k.arrival, k.departure}] = kwh;
    return m;
}

std::map<Key, PowerVector> from_schedule(const Schedule& s) {
    std::map<Key, PowerVector> m;
    for (const auto& [k, p] : s.profiles()) m[{k.arrival, k.departure}] = p;
    return m;
}

std::map<Key, double> from_prices(const PriceTable& t) {
    std::map<Key, double> m;
    for (const auto& [k, p] : t.entries) m[{k.arrival, k.departure}] = p;
    return m;
}

std::vector<ArrivalEvent> to_events(const std::vector<std::pair<int, std::map<int, double>>>& events) {
    std::vector<ArrivalEvent> out;
    for (const auto& [a, demands] : events) out.push_back({a, demands});
    return out;
}

py::dict stats_dict(const OverloadStats& s) {
    py::dict d;
    d["overload_slots"] = s.overload_slots;
    d["avg_overload_kw"] = s.avg_overload_kw;
    d["cost_gap_pct"] = s.cost_gap_pct;
    return d;
}

// Tag types so each error kind gets its own Python class.
struct ConfigTag {};
struct IoTag {};
struct SolverTag {};
struct InfeasibleTag {};

} // namespace

PYBIND11_MODULE(_evcharge, m) {
    m.doc() = "Online and offline EV charging by water-filling, with marginal-cost charging prices.";

    static py::exception<Error> base(m, "EvchargeError", PyExc_RuntimeError);
    static py::exception<ConfigTag> config_error(m, "ConfigError", base.ptr());
    static py::exception<IoTag> io_error(m, "IoError", base.ptr());
    static py::exception<SolverTag> solver_error(m, "SolverError", base.ptr());
    static py::exception<InfeasibleTag> infeasible_error(m, "InfeasibleError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            switch (e.kind()) {
            case ErrorKind::InvalidArgument: py::set_error(PyExc_ValueError, e.what()); break;
            case ErrorKind::Config: py::set_error(config_error, e.what()); break;
            case ErrorKind::Io: py::set_error(io_error, e.what()); break;
            case ErrorKind::Solver: py::set_error(solver_error, e.what()); break;
            case ErrorKind::Infeasible: py::set_error(infeasible_error, e.what()); break;
            }
        }
    });

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init<int, double, std::vector<std::string>>(), py::arg("num_slots"), py::arg("slot_hours"),
             py::arg("labels") = std::vector<std::string>{})
        .def_static("with_clock_labels", &TimeGrid::with_clock_labels, py::arg("num_slots"), py::arg("slot_hours"),
                    py::arg("start_label"))
        .def_property_readonly("num_slots", &TimeGrid::num_slots)
        .def_property_readonly("slot_hours", &TimeGrid::slot_hours)
        .def_property_readonly("labels", &TimeGrid::labels)
        .def("label", &TimeGrid::label)
        .def("__repr__", [](const TimeGrid& g) {
            return "TimeGrid(num_slots=" + std::to_string(g.num_slots()) +
                   ", slot_hours=" + std::to_string(g.slot_hours()) + ")";
        });

    py::class_<QuadraticCost>(m, "QuadraticCost")
        .def(py::init([](double quad, double lin, double constant, double range_min, double range_max) {
                 QuadraticCost f{quad, lin, constant, range_min, range_max};
                 f.validate();
                 return f;
             }),
             py::arg("quad"), py::arg("lin") = 0.0, py::arg("constant") = 0.0, py::arg("range_min") = 0.0,
             py::arg("range_max") = std::numeric_limits<double>::infinity())
        .def_static("for_baseline",
                    [](const PowerVector& b, double quad) { return QuadraticCost::for_baseline(BaselineProfile(b), quad); },
                    py::arg("baseline"), py::arg("quad") = 0.5)
        .def_readonly("quad", &QuadraticCost::quad)
        .def_readonly("lin", &QuadraticCost::lin)
        .def_readonly("constant", &QuadraticCost::constant)
        .def("__call__", &QuadraticCost::operator())
        .def("derivative", &QuadraticCost::derivative);

    py::class_<WaterFillResult>(m, "WaterFillResult")
        .def_readonly("charge", &WaterFillResult::charge)
        .def_readonly("level", &WaterFillResult::level)
        .def_readonly("used_slots", &WaterFillResult::used_slots);

    m.def(
        "water_fill",
        [](double energy_kwh, const std::vector<double>& baseline, double slot_hours) {
            return water_fill(energy_kwh, baseline, slot_hours);
        },
        py::arg("energy_kwh"), py::arg("baseline"), py::arg("slot_hours"),
        "Spread energy over a window so the total load is as flat as possible.");

    py::class_<Scenario>(m, "Scenario")
        .def_readonly("grid", &Scenario::grid)
        .def_property_readonly("baseline", [](const Scenario& s) { return s.baseline.power(); })
        .def_readonly("cost", &Scenario::cost)
        .def_property_readonly("demand", [](const Scenario& s) { return from_demand(s.demand); })
        .def_property_readonly("variance_pct",
                               [](const Scenario& s) -> std::optional<double> {
                                   if (s.commute) return s.commute->variance_pct;
                                   return std::nullopt;
                               })
        .def("with_variance", &Scenario::with_variance, py::arg("variance_pct"));

    m.def("load_scenario", &load_scenario, py::arg("path"), py::arg("pv") = std::nullopt);
    m.def("toy_instance", &toy_instance);

    py::class_<OnlineTrace>(m, "OnlineTrace")
        .def_readonly("cost", &OnlineTrace::cost)
        .def_readonly("total_load", &OnlineTrace::total_load)
        .def_readonly("realized_charge", &OnlineTrace::realized_charge)
        .def_readonly("realized_by_departure", &OnlineTrace::realized_by_departure)
        .def_property_readonly("plans", [](const OnlineTrace& t) {
            py::list plans;
            for (const auto& rec : t.events) {
                py::dict d;
                d["arrival"] = rec.event.arrival;
                d["cost"] = rec.plan.cost;
                d["groups"] = from_schedule(rec.plan.groups);
                plans.append(d);
            }
            return plans;
        });

    m.def(
        "run_online",
        [](const std::vector<std::pair<int, std::map<int, double>>>& events, const PowerVector& baseline,
           const TimeGrid& grid, const QuadraticCost& f) {
            return run_online(to_events(events), BaselineProfile(baseline), grid, f);
        },
        py::arg("events"), py::arg("baseline"), py::arg("grid"), py::arg("cost"),
        "Events are (arrival slot, {departure slot: kWh}) pairs in arrival order.");
    m.def(
        "run_online_scenario",
        [](const Scenario& s) { return run_online(events_from_demand(s.demand), s.baseline, s.grid, s.cost); },
        py::arg("scenario"));

    py::class_<OfflineSolution>(m, "OfflineSolution")
        .def_readonly("optimal_cost", &OfflineSolution::optimal_cost)
        .def_readonly("iterations", &OfflineSolution::iterations)
        .def_readonly("kkt_residual", &OfflineSolution::kkt_residual)
        .def_readonly("cost_history", &OfflineSolution::cost_history)
        .def_property_readonly("schedule", [](const OfflineSolution& s) { return from_schedule(s.schedule); })
        .def("total_load", [](const OfflineSolution& s, const PowerVector& baseline) {
            return total_load(s.schedule, BaselineProfile(baseline));
        });

    m.def(
        "solve_offline",
        [](const DemandMap& demand, const PowerVector& baseline, const TimeGrid& grid, const QuadraticCost& f) {
            return solve_offline(to_demand(demand), BaselineProfile(baseline), grid, f);
        },
        py::arg("demand"), py::arg("baseline"), py::arg("grid"), py::arg("cost"),
        "Demand maps (arrival, departure) slot pairs to kWh.");
    m.def(
        "solve_offline_scenario",
        [](const Scenario& s) { return solve_offline(s.demand, s.baseline, s.grid, s.cost); }, py::arg("scenario"));

    m.def(
        "offline_prices",
        [](const Scenario& s, std::optional<double> fd_step_kwh) {
            PricingOptions o;
            o.fd_step_kwh = fd_step_kwh;
            return from_prices(offline_cup(s.demand, s.baseline, s.grid, s.cost, o));
        },
        py::arg("scenario"), py::arg("fd_step_kwh") = std::nullopt);
    m.def(
        "online_prices",
        [](const Scenario& s, std::optional<double> fd_step_kwh) {
            PricingOptions o;
            o.fd_step_kwh = fd_step_kwh;
            const auto trace = run_online(events_from_demand(s.demand), s.baseline, s.grid, s.cost);
            return from_prices(online_prices(trace, s.cost, o));
        },
        py::arg("scenario"), py::arg("fd_step_kwh") = std::nullopt);

    m.def(
        "overload",
        [](const std::vector<double>& online, const std::vector<double>& offline, double eps_kw) {
            return stats_dict(overload(online, offline, eps_kw));
        },
        py::arg("online_total"), py::arg("offline_total"), py::arg("eps_kw") = 1e-6);
    m.def("cost_gap_pct", &cost_gap_pct, py::arg("online_cost"), py::arg("offline_cost"));
    m.def(
        "compare",
        [](const Scenario& s) {
            const auto c = compare(s);
            py::dict d = stats_dict(c.stats);
            d["online_cost"] = c.online.cost;
            d["offline_cost"] = c.offline.optimal_cost;
            return d;
        },
        py::arg("scenario"));
    m.def(
        "variance_sweep",
        [](const Scenario& s, double from_pct, double to_pct, double step_pct, bool with_prices, int jobs) {
            SweepOptions o;
            o.from_pct = from_pct;
            o.to_pct = to_pct;
            o.step_pct = step_pct;
            o.with_prices = with_prices;
            o.jobs = jobs;
            std::vector<SweepRow> rows;
            {
                py::gil_scoped_release release;
                rows = variance_sweep(s, o);
            }
            py::list out;
            for (const auto& r : rows) {
                py::dict d = stats_dict(r.stats);
                d["variance_pct"] = r.variance_pct;
                d["online_cost"] = r.online_cost;
                d["offline_cost"] = r.offline_cost;
                d["arrival_support"] = r.arrival_support;
                d["departure_support"] = r.departure_support;
                if (with_prices) {
                    d["online_prices"] = from_prices(r.online_prices);
                    d["offline_prices"] = from_prices(r.offline_prices);
                }
                out.append(d);
            }
            return out;
        },
        py::arg("scenario"), py::arg("from_pct") = 100.0, py::arg("to_pct") = 300.0, py::arg("step_pct") = 25.0,
        py::arg("with_prices") = false, py::arg("jobs") = 1);

    m.attr("__version__") = EVCHARGE_VERSION;
}
