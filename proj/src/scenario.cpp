#include "evcharge/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "evcharge/io.hpp"

namespace evcharge {

namespace {

/// P(lo <= X < hi) for a standard normal, keeping precision in both tails.
double normal_mass(double lo, double hi) {
    constexpr double kInvSqrt2 = 0.70710678118654752440;
    if (lo >= 0.0) return 0.5 * (std::erfc(lo * kInvSqrt2) - std::erfc(hi * kInvSqrt2));
    if (hi <= 0.0) return 0.5 * (std::erfc(-hi * kInvSqrt2) - std::erfc(-lo * kInvSqrt2));
    return 1.0 - 0.5 * std::erfc(-lo * kInvSqrt2) - 0.5 * std::erfc(hi * kInvSqrt2);
}

double scaled_sigma_h(double spread_min, const CommuteConfig& config) {
    const double k = config.variance_pct / 100.0;
    double sigma_min = config.reading == SpreadReading::StdDev ? spread_min : std::sqrt(spread_min);
    sigma_min *= config.scaling == SpreadScaling::SqrtOfScale ? std::sqrt(k) : k;
    return sigma_min / 60.0;
}

std::vector<double> discretize(double mean_h, double sigma_h, const std::vector<double>& lows,
                               double width_h, double floor, const char* what) {
    require(std::isfinite(sigma_h) && sigma_h > 0.0, ErrorKind::InvalidArgument,
            std::string("degenerate ") + what + " spread");
    std::vector<double> pmf(lows.size());
    for (std::size_t i = 0; i < lows.size(); ++i) {
        pmf[i] = normal_mass((lows[i] - mean_h) / sigma_h, (lows[i] + width_h - mean_h) / sigma_h);
    }
    double total = 0.0;
    for (double& p : pmf) {
        if (p < floor) p = 0.0;
        total += p;
    }
    require(total > 0.0, ErrorKind::InvalidArgument,
            std::string("no ") + what + " probability mass left on the grid");
    for (double& p : pmf) p /= total;
    return pmf;
}

} // namespace

double CommuteConfig::arrival_sigma_h() const { return scaled_sigma_h(arrival_spread_min, *this); }
double CommuteConfig::departure_sigma_h() const { return scaled_sigma_h(departure_spread_min, *this); }

void CommuteConfig::validate(const TimeGrid& grid) const {
    require(n_evs > 0.0 && std::isfinite(n_evs), ErrorKind::InvalidArgument, "n_evs must be positive");
    require(per_ev_kwh >= 0.0 && std::isfinite(per_ev_kwh), ErrorKind::InvalidArgument,
            "per_ev_kwh must be nonnegative");
    require(arrival_spread_min > 0.0 && departure_spread_min > 0.0, ErrorKind::InvalidArgument,
            "spreads must be positive");
    require(variance_pct > 0.0 && std::isfinite(variance_pct), ErrorKind::InvalidArgument,
            "variance scale must be positive");
    require(support_floor >= 0.0 && support_floor < 1.0, ErrorKind::InvalidArgument,
            "support floor must be in [0, 1)");
    const double start = grid.start_hour();
    const double end = start + grid.num_slots() * grid.slot_hours();
    require(arrival_mean_h >= start && arrival_mean_h <= end && departure_mean_h >= start &&
                departure_mean_h <= end,
            ErrorKind::InvalidArgument, "arrival and departure means must fall within the grid span");
}

SlotPmfs discretize_distributions(const CommuteConfig& config, const TimeGrid& grid) {
    config.validate(grid);
    const double delta = grid.slot_hours();
    const auto n = static_cast<std::size_t>(grid.num_slots());
    std::vector<double> arrival_lows(n);
    std::vector<double> departure_lows(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double slot_start = grid.start_hour() + static_cast<double>(i) * delta;
        const double slot_end = slot_start + delta;
        if (config.bins == BinAlignment::Centered) {
            arrival_lows[i] = slot_start - delta / 2.0;
            departure_lows[i] = slot_end - delta / 2.0;
        } else {
            arrival_lows[i] = slot_start;
            departure_lows[i] = slot_end; // slot d + 1
        }
    }
    return {discretize(config.arrival_mean_h, config.arrival_sigma_h(), arrival_lows, delta,
                       config.support_floor, "arrival"),
            discretize(config.departure_mean_h, config.departure_sigma_h(), departure_lows, delta,
                       config.support_floor, "departure")};
}

std::vector<int> support(const std::vector<double>& pmf) {
    std::vector<int> slots;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        if (pmf[i] > 0.0) slots.push_back(static_cast<int>(i) + 1);
    }
    return slots;
}

ClassDemand build_demand(const CommuteConfig& config, const SlotPmfs& pmfs, const TimeGrid& grid) {
    config.validate(grid);
    const auto n = static_cast<std::size_t>(grid.num_slots());
    require(pmfs.arrival.size() == n && pmfs.departure.size() == n, ErrorKind::InvalidArgument,
            "pmf length does not match the grid");

    constexpr double kPruneKwh = 1e-9;
    std::vector<std::pair<EVClassKey, double>> counts;
    double kept = 0.0;
    for (int a = 1; a <= grid.num_slots(); ++a) {
        for (int d = a; d <= grid.num_slots(); ++d) {
            const double count = config.n_evs * pmfs.arrival[static_cast<std::size_t>(a - 1)] *
                                 pmfs.departure[static_cast<std::size_t>(d - 1)];
            if (count * config.per_ev_kwh < kPruneKwh) continue;
            counts.push_back({{a, d}, count});
            kept += count;
        }
    }
    require(!counts.empty() && kept > 0.0, ErrorKind::InvalidArgument, "commute scenario yields no demand");

    const double scale = config.renormalize_dropped ? config.n_evs / kept : 1.0;
    ClassDemand demand;
    for (const auto& [key, count] : counts) demand.set(key, config.per_ev_kwh * count * scale);
    return demand;
}

BaselineProfile parse_pv_csv(const std::string& text, const TimeGrid& grid, double peak_kw) {
    using Reason = PvFormatError::Reason;
    std::istringstream in(text);
    std::string line;

    auto split = [](const std::string& row) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream fields(row);
        while (std::getline(fields, cell, ',')) {
            cell.erase(0, cell.find_first_not_of(" \t\""));
            cell.erase(cell.find_last_not_of(" \t\r\"") + 1);
            cells.push_back(cell);
        }
        return cells;
    };

    if (!std::getline(in, line)) throw PvFormatError(Reason::MissingColumn, "PV CSV is empty");
    const auto header = split(line);
    std::size_t column = header.size();
    bool is_cf = false;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "kw") column = i;
    }
    if (column == header.size()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == "cf") {
                column = i;
                is_cf = true;
            }
        }
    }
    if (column == header.size()) {
        throw PvFormatError(Reason::MissingColumn, "PV CSV needs a 'kw' or 'cf' column");
    }
    if (is_cf) {
        require(std::isfinite(peak_kw) && peak_kw > 0.0, ErrorKind::Config, "PV peak must be positive");
    }

    PowerVector baseline;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split(line);
        double value = 0.0;
        const std::string cell = column < cells.size() ? cells[column] : std::string{};
        const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
        if (cell.empty() || ec != std::errc{} || end != cell.data() + cell.size() || !std::isfinite(value)) {
            throw PvFormatError(Reason::Unparseable,
                                "PV CSV row " + std::to_string(row) + ": cannot parse '" + cell + "'");
        }
        if (value < 0.0) {
            throw PvFormatError(Reason::NegativeValue,
                                "PV CSV row " + std::to_string(row) + ": negative generation " + cell);
        }
        const double kw = is_cf ? value * peak_kw : value;
        baseline.push_back(kw == 0.0 ? 0.0 : -kw);
    }
    if (static_cast<int>(baseline.size()) != grid.num_slots()) {
        throw PvFormatError(Reason::RowCount, "PV CSV has " + std::to_string(baseline.size()) +
                                                  " rows, the grid has " + std::to_string(grid.num_slots()) +
                                                  " slots");
    }
    return BaselineProfile(std::move(baseline));
}

BaselineProfile load_pv_csv(const std::filesystem::path& path, const TimeGrid& grid, double peak_kw) {
    return parse_pv_csv(io::read_file(path), grid, peak_kw);
}

Scenario Scenario::with_variance(double pct) const {
    require(commute.has_value(), ErrorKind::Config, "variance scaling needs a commute scenario");
    Scenario copy = *this;
    copy.commute->variance_pct = pct;
    copy.demand = build_demand(*copy.commute, discretize_distributions(*copy.commute, grid), grid);
    return copy;
}

namespace {

using Json = nlohmann::json;

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        fail(ErrorKind::Config, std::string("config field '") + key + "' has the wrong type");
    }
}

CommuteConfig parse_commute(const Json& j) {
    require(j.is_object(), ErrorKind::Config, "'commute' must be an object");
    CommuteConfig c;
    c.n_evs = get_or(j, "n_evs", c.n_evs);
    c.per_ev_kwh = get_or(j, "per_ev_kwh", c.per_ev_kwh);
    if (j.contains("arrival_mean")) c.arrival_mean_h = parse_clock(get_or<std::string>(j, "arrival_mean", ""));
    if (j.contains("departure_mean")) c.departure_mean_h = parse_clock(get_or<std::string>(j, "departure_mean", ""));
    c.arrival_spread_min = get_or(j, "arrival_spread_min", c.arrival_spread_min);
    c.departure_spread_min = get_or(j, "departure_spread_min", c.departure_spread_min);
    c.variance_pct = get_or(j, "variance_pct", c.variance_pct);
    c.support_floor = get_or(j, "support_floor", c.support_floor);
    c.renormalize_dropped = get_or(j, "renormalize_dropped", c.renormalize_dropped);

    const auto reading = get_or<std::string>(j, "spread_reading", "std_dev");
    if (reading == "std_dev") c.reading = SpreadReading::StdDev;
    else if (reading == "variance") c.reading = SpreadReading::Variance;
    else fail(ErrorKind::Config, "spread_reading must be std_dev or variance");

    const auto scaling = get_or<std::string>(j, "spread_scaling", "linear");
    if (scaling == "sqrt") c.scaling = SpreadScaling::SqrtOfScale;
    else if (scaling == "linear") c.scaling = SpreadScaling::Linear;
    else fail(ErrorKind::Config, "spread_scaling must be sqrt or linear");

    const auto bins = get_or<std::string>(j, "bins", "centered");
    if (bins == "centered") c.bins = BinAlignment::Centered;
    else if (bins == "slot_edges") c.bins = BinAlignment::SlotEdges;
    else fail(ErrorKind::Config, "bins must be centered or slot_edges");
    return c;
}

} // namespace

Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir,
                        const std::optional<std::filesystem::path>& pv_override) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const Json::exception& e) {
        fail(ErrorKind::Config, std::string("scenario config is not valid JSON: ") + e.what());
    }
    require(root.is_object() && root.contains("grid") && root["grid"].is_object(), ErrorKind::Config,
            "scenario config needs a 'grid' object");

    const Json& g = root["grid"];
    require(g.contains("T") && g.contains("delta_hours"), ErrorKind::Config, "grid needs T and delta_hours");
    TimeGrid grid = [&] {
        try {
            return TimeGrid::with_clock_labels(get_or(g, "T", 0), get_or(g, "delta_hours", 0.0),
                                               get_or<std::string>(g, "start_label", "00:00"));
        } catch (const Error& e) {
            throw Error(ErrorKind::Config, std::string("grid: ") + e.what());
        }
    }();

    // Baseline: inline list or CSV (kw or cf column).
    std::optional<std::filesystem::path> pv_path;
    double peak_kw = 560.0;
    PowerVector inline_power;
    if (root.contains("baseline")) {
        const Json& b = root["baseline"];
        require(b.is_object(), ErrorKind::Config, "'baseline' must be an object");
        peak_kw = get_or(b, "peak_kw", peak_kw);
        if (b.contains("csv_path")) {
            pv_path = base_dir / get_or<std::string>(b, "csv_path", "");
        } else if (b.contains("inline")) {
            inline_power = get_or<PowerVector>(b, "inline", {});
        }
    }
    if (pv_override) pv_path = *pv_override;
    BaselineProfile baseline = pv_path ? load_pv_csv(*pv_path, grid, peak_kw)
                               : inline_power.empty()
                                   ? BaselineProfile::zeros(grid.num_slots())
                                   : BaselineProfile(inline_power);
    try {
        baseline.validate(grid);
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what());
    }

    Scenario scenario{grid, baseline, QuadraticCost::for_baseline(baseline), ClassDemand{}, std::nullopt,
                      pv_path, peak_kw};
    if (root.contains("cost")) {
        const Json& c = root["cost"];
        require(c.is_object(), ErrorKind::Config, "'cost' must be an object");
        scenario.auto_cost_quad = get_or(c, "quad", 0.5);
        if (c.contains("lin") || c.contains("const")) {
            scenario.auto_cost = false;
            QuadraticCost f;
            f.quad = scenario.auto_cost_quad;
            f.lin = get_or(c, "lin", 0.0);
            f.constant = get_or(c, "const", 0.0);
            f.range_min = baseline.min();
            f.range_max = std::numeric_limits<double>::infinity();
            scenario.cost = f;
        } else {
            scenario.cost = QuadraticCost::for_baseline(baseline, scenario.auto_cost_quad);
        }
        try {
            scenario.cost.validate();
        } catch (const Error& e) {
            throw Error(ErrorKind::Config, std::string("cost: ") + e.what());
        }
    }

    try {
        if (root.contains("commute")) {
            scenario.commute = parse_commute(root["commute"]);
            scenario.demand = build_demand(*scenario.commute, discretize_distributions(*scenario.commute, grid), grid);
        } else if (root.contains("demand")) {
            require(root["demand"].is_array(), ErrorKind::Config, "'demand' must be an array");
            for (const auto& entry : root["demand"]) {
                require(entry.is_object() && entry.contains("a") && entry.contains("d") && entry.contains("kwh"),
                        ErrorKind::Config, "demand entries need a, d and kwh");
                const EVClassKey key{get_or(entry, "a", 0), get_or(entry, "d", 0)};
                scenario.demand.add(key, get_or(entry, "kwh", 0.0));
            }
            scenario.demand.validate(grid);
        }
    } catch (const PvFormatError&) {
        throw;
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what());
    }
    return scenario;
}

Scenario load_scenario(const std::filesystem::path& path, const std::optional<std::filesystem::path>& pv_override) {
    return parse_scenario(io::read_file(path), path.parent_path(), pv_override);
}

Scenario toy_instance() {
    TimeGrid grid = TimeGrid::with_clock_labels(6, 2.0, "08:00");
    BaselineProfile baseline({3.0, 4.0, 4.0, 3.0, 3.0, 5.0});
    ClassDemand demand;
    demand.set({1, 1}, 8.0);
    demand.set({1, 2}, 4.0);
    demand.set({1, 3}, 14.0);
    demand.set({4, 6}, 8.0);
    demand.set({5, 5}, 10.0);
    QuadraticCost f = QuadraticCost::for_baseline(baseline);
    return Scenario{grid, baseline, f, demand, std::nullopt, std::nullopt};
}

} // namespace evcharge
