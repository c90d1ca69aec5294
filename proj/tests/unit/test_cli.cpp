#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "evcharge/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using evcharge::io::read_file;
using Json = nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = evcharge::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("evcharge_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    return dir;
}

const std::string kToy = EVCHARGE_FIXTURES "/toy.json";
const std::string kCommute = EVCHARGE_FIXTURES "/commute.json";

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    FAIL("missing column " << name);
    return 0;
}

void check_manifest(const fs::path& dir) {
    const Json m = Json::parse(read_file(dir / "manifest.json"));
    for (const auto& [name, hash] : m["outputs"].items()) {
        REQUIRE(fs::exists(dir / name));
        CHECK(evcharge::io::sha256_hex(read_file(dir / name)) == hash.get<std::string>());
    }
    CHECK(m["tool_version"] == EVCHARGE_VERSION);
}

} // namespace

TEST_CASE("online run on the toy instance postpones the (4,6) charge") {
    const auto dir = scratch("toy_online");
    const auto r = invoke({"run", "--config", kToy, "--out", dir.string(), "--regime", "online"});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(read_file(dir / "schedule.csv"));
    REQUIRE(rows.size() == 7);
    const auto g6 = column(rows[0], "group_6");
    const auto g2 = column(rows[0], "group_2");
    CHECK(rows[1][g2] == "0");
    CHECK(rows[2][g2] == "2");
    CHECK(rows[4][g6] == "2");
    CHECK(rows[5][g6] == "0");
    CHECK(rows[6][g6] == "2");
    const Json cost = Json::parse(read_file(dir / "cost.json"));
    CHECK(cost["cost"].get<double>() == doctest::Approx(165.0));
    check_manifest(dir);
}

TEST_CASE("offline run costs no more than the online run") {
    const auto on = scratch("toy_on"), off = scratch("toy_off");
    REQUIRE(invoke({"run", "--config", kToy, "--out", on.string()}).code == 0);
    REQUIRE(invoke({"run", "--config", kToy, "--out", off.string(), "--regime", "offline"}).code == 0);
    const double c_on = Json::parse(read_file(on / "cost.json"))["cost"].get<double>();
    const double c_off = Json::parse(read_file(off / "cost.json"))["cost"].get<double>();
    CHECK(c_off <= c_on);
    const auto rows = csv_rows(read_file(off / "schedule.csv"));
    CHECK(rows[0][2] == "class_1_1");
}

TEST_CASE("missing PV file: IO exit code and no outputs") {
    const auto dir = scratch("missing_pv");
    const auto r = invoke({"run", "--config", kCommute, "--pv", "/nonexistent/pv.csv", "--out", dir.string()});
    CHECK(r.code == evcharge::cli::kIo);
    CHECK_FALSE(fs::exists(dir));
    const Json err = Json::parse(r.err);
    CHECK(err["error"] == "io");
    CHECK(err["exit_code"] == 3);
}

TEST_CASE("config problems map to the config exit code") {
    const auto dir = scratch("bad");
    CHECK(invoke({"run", "--config", kToy, "--out", dir.string(), "--regime", "sideways"}).code == 2);
    CHECK(invoke({"run", "--out", dir.string()}).code == 2);
    CHECK(invoke({"run", "--config", kToy, "--out", dir.string(), "--variance-pct", "150"}).code == 2);
    CHECK(invoke({"sweep", "--config", kCommute, "--out", dir.string(), "--sweep", "100:300:30"}).code == 2);
    CHECK(invoke({"sweep", "--config", kCommute, "--out", dir.string(), "--sweep", "abc"}).code == 2);
    CHECK(invoke({"run", "--config", "/nonexistent/config.json", "--out", dir.string()}).code == 3);

    const auto broken = scratch("broken.json");
    evcharge::io::write_file(broken, "{\"grid\": ");
    const auto r = invoke({"run", "--config", broken.string(), "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(Json::parse(r.err)["error"] == "config");
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("help and version") {
    CHECK(invoke({"--help"}).code == 0);
    const auto v = invoke({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find(EVCHARGE_VERSION) != std::string::npos);
}

TEST_CASE("events file replaces the configured demand") {
    const auto dir = scratch("events");
    const auto events = scratch("events.jsonl");
    evcharge::io::write_file(events, "{\"a\": 1, \"demands\": {\"2\": 4}}\n");
    REQUIRE(invoke({"run", "--config", kToy, "--events", events.string(), "--out", dir.string()}).code == 0);
    const auto rows = csv_rows(read_file(dir / "schedule.csv"));
    CHECK(rows[0].size() == 3);
}

TEST_CASE("default sweep: nine rows and normalized prices peak at one") {
    const auto dir = scratch("sweep");
    REQUIRE(invoke({"sweep", "--config", kCommute, "--out", dir.string(), "--jobs", "4"}).code == 0);
    CHECK(csv_rows(read_file(dir / "sweep.csv")).size() == 10);
    const auto prices = csv_rows(read_file(dir / "prices_normalized.csv"));
    double top = 0.0;
    for (std::size_t i = 1; i < prices.size(); ++i) top = std::max(top, std::stod(prices[i][2]));
    CHECK(top == 1.0);
    check_manifest(dir);
}

TEST_CASE("one-point sweep equals the matching run") {
    const auto sweep = scratch("one_sweep"), run = scratch("one_run");
    REQUIRE(invoke({"sweep", "--config", kCommute, "--out", sweep.string(), "--sweep", "150:150:25", "--no-prices"})
                .code == 0);
    REQUIRE(invoke({"run", "--config", kCommute, "--out", run.string(), "--regime", "both", "--variance-pct", "150"})
                .code == 0);
    const Json ms = Json::parse(read_file(sweep / "manifest.json"))["metrics"]["points"][0];
    const Json mr = Json::parse(read_file(run / "manifest.json"))["metrics"];
    CHECK(ms["cost_gap_pct"] == mr["cost_gap_pct"]);
    CHECK(ms["overload_slots"] == mr["overload_slots"]);
    CHECK(ms["avg_overload_kw"] == mr["avg_overload_kw"]);
}

TEST_CASE("price command on a one-class instance") {
    const auto cfg = scratch("one_class.json");
    evcharge::io::write_file(cfg, R"({"grid": {"T": 1, "delta_hours": 1}, "cost": {"quad": 1, "lin": 0},
        "demand": [{"a": 1, "d": 1, "kwh": 2}]})");
    const auto dir = scratch("one_class");
    REQUIRE(invoke({"price", "--config", cfg.string(), "--out", dir.string(), "--regime", "offline"}).code == 0);
    const auto rows = csv_rows(read_file(dir / "prices.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(std::stod(rows[1][2]) == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(rows[1][3] == "offline");
}

TEST_CASE("price command on the commute scenario") {
    const auto dir = scratch("commute_prices");
    REQUIRE(invoke({"price", "--config", kCommute, "--out", dir.string()}).code == 0);
    const auto rows = csv_rows(read_file(dir / "prices.csv"));
    double lo = 1e300, hi = 0.0;
    std::map<int, double> online_by_arrival;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double p = std::stod(rows[i][2]);
        if (rows[i][3] == "offline") {
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        } else {
            online_by_arrival[std::stoi(rows[i][0])] = p;
        }
    }
    CHECK((hi - lo) / hi <= 1e-3);
    double prev = 0.0;
    for (const auto& [a, p] : online_by_arrival) {
        CHECK(p >= prev);
        prev = p;
    }
}

TEST_CASE("repeated commands produce identical bytes") {
    ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
    const std::vector<std::vector<std::string>> commands{
        {"run", "--config", kToy, "--regime", "both"},
        {"price", "--config", kToy},
        {"sweep", "--config", kCommute, "--sweep", "100:200:50", "--jobs", "3"},
    };
    int n = 0;
    for (const auto& base : commands) {
        const auto a = scratch("det_a" + std::to_string(n)), b = scratch("det_b" + std::to_string(n));
        ++n;
        auto args_a = base, args_b = base;
        args_a.insert(args_a.end(), {"--out", a.string()});
        args_b.insert(args_b.end(), {"--out", b.string()});
        REQUIRE(invoke(args_a).code == 0);
        REQUIRE(invoke(args_b).code == 0);
        for (const auto& entry : fs::directory_iterator(a)) {
            CHECK(read_file(entry.path()) == read_file(b / entry.path().filename()));
        }
        const Json m = Json::parse(read_file(a / "manifest.json"));
        CHECK(m["timestamp"] == "2023-11-14T22:13:20Z");
    }
    ::unsetenv("SOURCE_DATE_EPOCH");
}

TEST_CASE("commands leave their inputs alone") {
    const auto before = read_file(kCommute);
    const auto pv_before = read_file(EVCHARGE_FIXTURES "/pv_winter_day.csv");
    REQUIRE(invoke({"run", "--config", kCommute, "--out", scratch("untouched").string()}).code == 0);
    CHECK(read_file(kCommute) == before);
    CHECK(read_file(EVCHARGE_FIXTURES "/pv_winter_day.csv") == pv_before);
}
