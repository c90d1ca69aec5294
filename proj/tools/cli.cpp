#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "json.hpp"

#include "evcharge/io.hpp"
#include "evcharge/metrics.hpp"
#include "evcharge/offline.hpp"
#include "evcharge/online.hpp"
#include "evcharge/pricing.hpp"
#include "evcharge/scenario.hpp"

namespace evcharge::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct CommonArgs {
    std::string config;
    std::string pv;
    std::string out;
    std::optional<double> variance_pct;
    std::optional<double> fd_step_kwh;
    bool seedless = false;
};

struct RunArgs {
    std::string regime = "online";
    std::string events;
};

struct SweepArgs {
    std::string range = "100:300:25";
    int jobs = 1;
    bool no_prices = false;
};

struct PriceArgs {
    std::string regime = "both";
};

/// Everything a command produces, assembled before anything touches disk.
struct ResultSet {
    std::string command;
    std::optional<fs::path> pv_path;
    Json options = Json::object();
    Json metrics = Json::object();
    std::vector<std::pair<std::string, std::string>> files;
};

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::Config: return kConfig;
    case ErrorKind::Io: return kIo;
    case ErrorKind::Solver: return kSolver;
    case ErrorKind::Infeasible: return kInfeasible;
    }
    return kInternal;
}

void report(std::ostream& err, std::string_view kind, const std::string& message, int code) {
    Json j;
    j["error"] = kind;
    j["message"] = message;
    j["exit_code"] = code;
    err << j.dump() << '\n';
}

std::string timestamp() {
    std::time_t t = 0;
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
        char* end = nullptr;
        const long long v = std::strtoll(epoch, &end, 10);
        require(end && *end == '\0' && v >= 0, ErrorKind::Config, "SOURCE_DATE_EPOCH must be a non-negative integer");
        t = static_cast<std::time_t>(v);
    } else {
        t = std::time(nullptr);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Scenario load(const CommonArgs& args) {
    std::optional<fs::path> pv;
    if (!args.pv.empty()) pv = args.pv;
    Scenario scenario = load_scenario(args.config, pv);
    if (args.variance_pct) {
        require(scenario.commute.has_value(), ErrorKind::Config, "--variance-pct needs a commute scenario");
        scenario = scenario.with_variance(*args.variance_pct);
    }
    return scenario;
}

PricingOptions pricing_options(const CommonArgs& args) {
    PricingOptions options;
    if (args.fd_step_kwh) {
        require(*args.fd_step_kwh > 0.0, ErrorKind::Config, "--fd-step-kwh must be positive");
        options.fd_step_kwh = args.fd_step_kwh;
    }
    return options;
}

std::string schedule_csv(const TimeGrid& grid, const std::vector<std::pair<std::string, PowerVector>>& columns) {
    std::ostringstream out;
    out << "slot,label";
    for (const auto& [name, power] : columns) out << ',' << name;
    out << io::kEol;
    for (int t = 1; t <= grid.num_slots(); ++t) {
        out << t << ',' << grid.label(t);
        for (const auto& [name, power] : columns) out << ',' << io::number(power[static_cast<std::size_t>(t - 1)]);
        out << io::kEol;
    }
    return out.str();
}

std::vector<std::pair<std::string, PowerVector>> online_columns(const OnlineTrace& trace) {
    std::vector<std::pair<std::string, PowerVector>> columns;
    for (const auto& [d, power] : trace.realized_by_departure) columns.emplace_back("group_" + std::to_string(d), power);
    return columns;
}

std::vector<std::pair<std::string, PowerVector>> offline_columns(const Schedule& schedule) {
    std::vector<std::pair<std::string, PowerVector>> columns;
    for (const auto& [key, power] : schedule.profiles()) {
        columns.emplace_back("class_" + std::to_string(key.arrival) + "_" + std::to_string(key.departure), power);
    }
    return columns;
}

std::string load_csv(const TimeGrid& grid, const BaselineProfile& baseline,
                     const std::vector<std::pair<std::string, PowerVector>>& totals) {
    std::ostringstream out;
    out << "slot,label,baseline_kw";
    for (const auto& [name, total] : totals) out << ',' << name;
    out << io::kEol;
    for (int t = 1; t <= grid.num_slots(); ++t) {
        const auto i = static_cast<std::size_t>(t - 1);
        out << t << ',' << grid.label(t) << ',' << io::number(baseline.power()[i]);
        for (const auto& [name, total] : totals) out << ',' << io::number(total[i]);
        out << io::kEol;
    }
    return out.str();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json online_json(const OnlineTrace& trace) {
    Json j;
    j["regime"] = "online";
    j["cost"] = trace.cost;
    Json events = Json::array();
    for (const auto& rec : trace.events) events.push_back({{"a", rec.event.arrival}, {"planned_cost", rec.plan.cost}});
    j["events"] = std::move(events);
    return j;
}

Json offline_json(const OfflineSolution& sol) {
    Json j;
    j["regime"] = "offline";
    j["cost"] = sol.optimal_cost;
    j["iterations"] = sol.iterations;
    j["kkt_residual"] = sol.kkt_residual;
    return j;
}

ClassDemand demand_from_events(std::span<const ArrivalEvent> events) {
    ClassDemand demand;
    for (const auto& e : events) {
        for (const auto& [d, kwh] : e.new_demands) demand.add({e.arrival, d}, kwh);
    }
    return demand;
}

ResultSet cmd_run(const CommonArgs& common, const RunArgs& args) {
    Scenario scenario = load(common);
    std::vector<ArrivalEvent> events;
    if (!args.events.empty()) {
        std::istringstream in(io::read_file(args.events));
        events = read_events_jsonl(in);
        scenario.demand = demand_from_events(events);
        scenario.demand.validate(scenario.grid);
    } else {
        events = events_from_demand(scenario.demand);
    }

    ResultSet rs;
    rs.command = "run";
    rs.pv_path = scenario.pv_path;
    rs.options["regime"] = args.regime;
    if (!args.events.empty()) rs.options["events"] = args.events;
    const auto& grid = scenario.grid;

    std::optional<OnlineTrace> online;
    std::optional<OfflineSolution> offline;
    if (args.regime != "offline") online = run_online(events, scenario.baseline, grid, scenario.cost);
    if (args.regime != "online") offline = solve_offline(scenario.demand, scenario.baseline, grid, scenario.cost);

    if (online && offline) {
        const PowerVector offline_total = total_load(offline->schedule, scenario.baseline);
        OverloadStats stats = overload(online->total_load, offline_total);
        stats.cost_gap_pct = cost_gap_pct(online->cost, offline->optimal_cost);
        rs.files.emplace_back("schedule_online.csv", schedule_csv(grid, online_columns(*online)));
        rs.files.emplace_back("schedule_offline.csv", schedule_csv(grid, offline_columns(offline->schedule)));
        rs.files.emplace_back("total_load.csv", load_csv(grid, scenario.baseline,
                                                         {{"online_total_kw", online->total_load},
                                                          {"offline_total_kw", offline_total}}));
        Json cost;
        cost["online"] = online_json(*online);
        cost["offline"] = offline_json(*offline);
        cost["cost_gap_pct"] = stats.cost_gap_pct;
        cost["overload_slots"] = stats.overload_slots;
        cost["avg_overload_kw"] = stats.avg_overload_kw;
        rs.files.emplace_back("cost.json", dump(cost));
        rs.metrics["online_cost"] = online->cost;
        rs.metrics["offline_cost"] = offline->optimal_cost;
        rs.metrics["cost_gap_pct"] = stats.cost_gap_pct;
        rs.metrics["overload_slots"] = stats.overload_slots;
        rs.metrics["avg_overload_kw"] = stats.avg_overload_kw;
    } else if (online) {
        rs.files.emplace_back("schedule.csv", schedule_csv(grid, online_columns(*online)));
        rs.files.emplace_back("total_load.csv", load_csv(grid, scenario.baseline,
                                                         {{"charging_kw", online->realized_charge},
                                                          {"total_kw", online->total_load}}));
        rs.files.emplace_back("cost.json", dump(online_json(*online)));
        rs.metrics["cost"] = online->cost;
    } else {
        const PowerVector total = total_load(offline->schedule, scenario.baseline);
        PowerVector charging(total.size());
        for (std::size_t i = 0; i < total.size(); ++i) charging[i] = total[i] - scenario.baseline.power()[i];
        rs.files.emplace_back("schedule.csv", schedule_csv(grid, offline_columns(offline->schedule)));
        rs.files.emplace_back("total_load.csv",
                              load_csv(grid, scenario.baseline, {{"charging_kw", charging}, {"total_kw", total}}));
        rs.files.emplace_back("cost.json", dump(offline_json(*offline)));
        rs.metrics["cost"] = offline->optimal_cost;
    }
    return rs;
}

SweepOptions parse_range(const std::string& text) {
    SweepOptions options;
    char c1 = 0, c2 = 0, tail = 0;
    std::istringstream in(text);
    if (!(in >> options.from_pct >> c1 >> options.to_pct >> c2 >> options.step_pct) || c1 != ':' || c2 != ':' ||
        (in >> tail)) {
        fail(ErrorKind::Config, "--sweep expects FROM:TO:STEP in percent, got '" + text + "'");
    }
    return options;
}

std::string join_slots(const std::vector<int>& slots) {
    std::string s;
    for (int slot : slots) s += (s.empty() ? "" : " ") + std::to_string(slot);
    return s;
}

ResultSet cmd_sweep(const CommonArgs& common, const SweepArgs& args) {
    require(!common.variance_pct, ErrorKind::Config, "--variance-pct does not apply to sweep; use --sweep");
    const Scenario scenario = load(common);
    SweepOptions options = parse_range(args.range);
    require(args.jobs >= 1, ErrorKind::Config, "--jobs must be at least 1");
    options.jobs = args.jobs;
    options.with_prices = !args.no_prices;
    options.pricing = pricing_options(common);
    std::vector<SweepRow> rows;
    try {
        rows = variance_sweep(scenario, options);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidArgument) throw Error(ErrorKind::Config, e.what());
        throw;
    }

    ResultSet rs;
    rs.command = "sweep";
    rs.pv_path = scenario.pv_path;
    rs.options["sweep"] = args.range;
    rs.options["prices"] = options.with_prices;

    std::ostringstream sweep;
    write_sweep_csv(sweep, rows);
    rs.files.emplace_back("sweep.csv", sweep.str());

    std::ostringstream support_csv;
    support_csv << "variance_pct,arrival_slots,departure_slots" << io::kEol;
    for (const auto& row : rows) {
        support_csv << io::number(row.variance_pct) << ',' << join_slots(row.arrival_support) << ','
                    << join_slots(row.departure_support) << io::kEol;
    }
    rs.files.emplace_back("support.csv", support_csv.str());

    if (options.with_prices) {
        std::vector<PriceTable> tables;
        for (const auto& row : rows) {
            tables.push_back(row.online_prices);
            tables.push_back(row.offline_prices);
        }
        std::ostringstream raw;
        write_price_csv_header(raw);
        for (std::size_t i = 0; i < tables.size(); ++i) write_price_rows(raw, tables[i], rows[i / 2].variance_pct);
        normalize(tables);
        std::ostringstream norm;
        write_price_csv_header(norm);
        for (std::size_t i = 0; i < tables.size(); ++i) write_price_rows(norm, tables[i], rows[i / 2].variance_pct);
        rs.files.emplace_back("prices.csv", raw.str());
        rs.files.emplace_back("prices_normalized.csv", norm.str());
        if (!tables.empty() && tables.front().normalization) rs.metrics["price_normalization"] = *tables.front().normalization;
    }
    Json points = Json::array();
    for (const auto& row : rows) {
        points.push_back({{"variance_pct", row.variance_pct},
                          {"cost_gap_pct", row.stats.cost_gap_pct},
                          {"overload_slots", row.stats.overload_slots},
                          {"avg_overload_kw", row.stats.avg_overload_kw}});
    }
    rs.metrics["points"] = std::move(points);
    return rs;
}

ResultSet cmd_price(const CommonArgs& common, const PriceArgs& args) {
    const Scenario scenario = load(common);
    const PricingOptions options = pricing_options(common);
    const double pct = scenario.commute ? scenario.commute->variance_pct : 0.0;

    std::vector<PriceTable> tables;
    double worst_check = 0.0;
    if (args.regime != "offline") {
        const OnlineTrace trace = run_online(events_from_demand(scenario.demand), scenario.baseline, scenario.grid,
                                             scenario.cost);
        PriceTable table = online_prices(trace, scenario.cost, options);
        for (const auto& rec : trace.events) {
            PowerVector total = total_load(rec.plan.groups, scenario.baseline);
            for (std::size_t i = 0; i < total.size(); ++i) total[i] += rec.context.realized[i];
            for (const auto& [d, kwh] : rec.event.new_demands) {
                const EVClassKey key{rec.event.arrival, d};
                const auto check = analytic_check(table.entries.at(key), key, rec.plan.groups, total, scenario.cost);
                if (!check.skipped) worst_check = std::max(worst_check, check.residual);
            }
        }
        tables.push_back(std::move(table));
    }
    if (args.regime != "online") {
        const OfflineSolution sol =
            solve_offline(scenario.demand, scenario.baseline, scenario.grid, scenario.cost, options.solver);
        PriceTable table = offline_cup(scenario.demand, scenario.baseline, scenario.grid, scenario.cost, options);
        const PowerVector total = total_load(sol.schedule, scenario.baseline);
        for (const auto& [key, price] : table.entries) {
            const auto check = analytic_check(price, key, sol.schedule, total, scenario.cost);
            if (!check.skipped) worst_check = std::max(worst_check, check.residual);
        }
        tables.push_back(std::move(table));
    }

    ResultSet rs;
    rs.command = "price";
    rs.pv_path = scenario.pv_path;
    rs.options["regime"] = args.regime;
    std::ostringstream raw;
    write_price_csv_header(raw);
    for (const auto& t : tables) write_price_rows(raw, t, pct);
    normalize(tables);
    std::ostringstream norm;
    write_price_csv_header(norm);
    for (const auto& t : tables) write_price_rows(norm, t, pct);
    rs.files.emplace_back("prices.csv", raw.str());
    rs.files.emplace_back("prices_normalized.csv", norm.str());
    rs.metrics["analytic_check_max_residual"] = worst_check;
    if (!tables.empty() && tables.front().normalization) rs.metrics["price_normalization"] = *tables.front().normalization;
    return rs;
}

std::string manifest(const ResultSet& rs, const CommonArgs& common) {
    Json m;
    m["command"] = rs.command;
    m["config"] = common.config;
    m["config_sha256"] = io::sha256_hex(io::read_file(common.config));
    Json fixtures = Json::object();
    if (rs.pv_path) fixtures[rs.pv_path->generic_string()] = io::sha256_hex(io::read_file(*rs.pv_path));
    m["fixtures"] = std::move(fixtures);
    m["tool_version"] = EVCHARGE_VERSION;
    m["timestamp"] = timestamp();
    Json options = rs.options;
    if (!common.pv.empty()) options["pv"] = common.pv;
    if (common.variance_pct) options["variance_pct"] = *common.variance_pct;
    if (common.fd_step_kwh) options["fd_step_kwh"] = *common.fd_step_kwh;
    options["seedless"] = true;
    m["options"] = std::move(options);
    m["metrics"] = rs.metrics;
    Json outputs = Json::object();
    for (const auto& [name, contents] : rs.files) outputs[name] = io::sha256_hex(contents);
    m["outputs"] = std::move(outputs);
    return dump(m);
}

/// Stages every file as `<name>.tmp`, then renames them into place. On
/// failure the staged and renamed files are removed again.
void commit(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
    const bool created = !fs::exists(dir);
    std::vector<fs::path> written;
    try {
        fs::create_directories(dir);
        for (const auto& [name, contents] : files) {
            const fs::path tmp = dir / (name + ".tmp");
            written.push_back(tmp);
            io::write_file(tmp, contents);
        }
        for (const auto& [name, contents] : files) {
            fs::rename(dir / (name + ".tmp"), dir / name);
            written.push_back(dir / name);
        }
    } catch (const std::exception& e) {
        std::error_code ec;
        for (const auto& p : written) fs::remove(p, ec);
        if (created) fs::remove(dir, ec);
        throw Error(ErrorKind::Io, std::string("writing outputs to ") + dir.string() + ": " + e.what());
    }
}

void add_common(CLI::App* sub, CommonArgs& common, bool variance, bool fd_step) {
    sub->add_option("--config", common.config, "Scenario config (JSON)")->required();
    sub->add_option("--out", common.out, "Output directory")->required();
    sub->add_option("--pv", common.pv, "PV CSV replacing the one named in the config");
    if (variance) {
        sub->add_option("--variance-pct", common.variance_pct, "Variance scale of the commute distributions, percent");
    }
    if (fd_step) sub->add_option("--fd-step-kwh", common.fd_step_kwh, "Fixed finite-difference step for prices, kWh");
    sub->add_flag("--seedless", common.seedless, "Accepted for clarity; every command is deterministic");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Online and offline EV charging schedules and charging prices", "evcharge"};
    app.set_version_flag("--version", EVCHARGE_VERSION);
    app.require_subcommand(1);

    CommonArgs common;
    RunArgs run_args;
    SweepArgs sweep_args;
    PriceArgs price_args;
    const std::vector<std::string> regimes{"online", "offline", "both"};

    auto* run_cmd = app.add_subcommand("run", "Schedule one scenario");
    add_common(run_cmd, common, true, true);
    run_cmd->add_option("--regime", run_args.regime, "online, offline or both")->check(CLI::IsMember(regimes));
    run_cmd->add_option("--events", run_args.events, "Arrival events as JSON lines, replacing the config demand");

    auto* sweep_cmd = app.add_subcommand("sweep", "Variance sweep of a commute scenario");
    add_common(sweep_cmd, common, true, true);
    sweep_cmd->add_option("--sweep", sweep_args.range, "FROM:TO:STEP variance scale, percent");
    sweep_cmd->add_option("--jobs", sweep_args.jobs, "Worker threads");
    sweep_cmd->add_flag("--no-prices", sweep_args.no_prices, "Skip the price tables");

    auto* price_cmd = app.add_subcommand("price", "Charging unit prices per class");
    add_common(price_cmd, common, true, true);
    price_cmd->add_option("--regime", price_args.regime, "online, offline or both")->check(CLI::IsMember(regimes));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        report(err, "usage", e.what(), kConfig);
        return kConfig;
    }

    try {
        ResultSet rs;
        if (*run_cmd) {
            rs = cmd_run(common, run_args);
        } else if (*sweep_cmd) {
            rs = cmd_sweep(common, sweep_args);
        } else {
            rs = cmd_price(common, price_args);
        }
        rs.files.emplace_back("manifest.json", manifest(rs, common));
        commit(common.out, rs.files);
        out << "wrote " << rs.files.size() << " files to " << common.out << '\n';
        return kOk;
    } catch (const Error& e) {
        const int code = exit_code(e.kind());
        report(err, to_string(e.kind()), e.what(), code);
        return code;
    } catch (const std::exception& e) {
        report(err, "internal", e.what(), kInternal);
        return kInternal;
    }
}

} // namespace evcharge::cli
