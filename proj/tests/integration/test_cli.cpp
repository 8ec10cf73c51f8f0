#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "somcm/bundle.hpp"
#include "somcm/io.hpp"
#include "../cli_support.hpp"

using namespace somcm;
using namespace somcm::test;
using nlohmann::json;

namespace {

// Small training set and fast map for every command below.
const char* kFastConfig =
    "[train]\nrows = 8\ncols = 8\nepochs = 10\n"
    "[filter]\nwindow = 120\n";

fs::path fast_project(const std::string& name) {
    const fs::path dir = scratch(name);
    std::ofstream(dir / "fast.toml") << kFastConfig;
    return dir;
}

json events_of(const json& warnings, const std::string& detector) {
    json out = json::array();
    for (const auto& e : warnings["events"]) {
        if (e["detector"] == detector) {
            out.push_back(e);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    const fs::path dir = scratch("usage");
    CHECK(cli(dir, "").code == 2);
    CHECK(cli(dir, "frobnicate").code == 2);
    CHECK(cli(dir, "--format xml gen").code == 2);
}

TEST_CASE("non-monotone timestamps are rejected with the row") {
    const fs::path dir = scratch("monotone");
    std::ofstream(dir / "bad.csv") << "timestamp,a\n2018-01-01T00:00:00Z,1\n2018-01-01T00:02:00Z,2\n"
                                      "2018-01-01T00:01:00Z,3\n";
    const Run r = cli(dir, "--out o clean bad.csv");
    CHECK(r.code == 2);
    CHECK(r.err.find("data row 3") != std::string::npos);
}

TEST_CASE("config problems exit 3") {
    const fs::path dir = scratch("config");
    std::ofstream(dir / "typo.toml") << "[train]\nepoch = 3\n";
    const Run typo = cli(dir, "--config typo.toml gen");
    CHECK(typo.code == 3);
    CHECK(typo.err.find("line 2") != std::string::npos);
    CHECK(cli(dir, "--config missing.toml gen").code == 3);
    CHECK(cli(dir, "--out o clean").code == 3);
    CHECK(cli(dir, "--out o train nowhere.csv").code == 3);
}

TEST_CASE("gen then clean writes a report") {
    const fs::path dir = scratch("clean");
    REQUIRE(cli(dir, "--out . gen --train-days 1 --monitor-days 1").code == 0);
    for (const char* f : {"train.csv", "stream.csv", "labels.csv", "faults.csv", "resolved_config.toml"}) {
        CHECK(fs::exists(dir / f));
    }
    const Run r = cli(dir, "--out . --format json clean train.csv");
    REQUIRE(r.code == 0);
    const json report = json::parse(r.out);
    CHECK(report["below_threshold"].empty());
    CHECK(fs::exists(dir / "cleaned.csv"));
    CHECK(fs::exists(dir / "flags.csv"));
    CHECK(fs::exists(dir / "cleaning_report.txt"));
    CHECK(json::parse(slurp(dir / "cleaning_report.json")) == report);
}

TEST_CASE("a dead variable is listed below threshold") {
    const fs::path dir = scratch("dead");
    REQUIRE(cli(dir, "--out . gen --train-days 1 --monitor-days 1 --fault sensor-freeze:bearing_temp:0:24").code == 0);
    const Run r = cli(dir, "--out . clean train.csv");
    REQUIRE(r.code == 0);
    const json report = json::parse(slurp(dir / "cleaning_report.json"));
    CHECK(report["below_threshold"] == json::array({"bearing_temp"}));
    CHECK(r.out.find("bearing_temp") != std::string::npos);
}

TEST_CASE("train is byte-reproducible and its bundle validates") {
    const fs::path dir = fast_project("train");
    REQUIRE(cli(dir, "--out . gen --train-days 2 --monitor-days 1").code == 0);
    const Run first = cli(dir, "--config fast.toml --out a train train.csv");
    REQUIRE(first.code == 0);
    CHECK(first.out.find("DM_delta") != std::string::npos);
    CHECK(first.out.find("LCL") != std::string::npos);
    CHECK(first.out.find("UCL") != std::string::npos);
    REQUIRE(cli(dir, "--config fast.toml --out b train train.csv").code == 0);
    const std::string a = slurp(dir / "a" / "bundle.json");
    CHECK(a == slurp(dir / "b" / "bundle.json"));
    CHECK_NOTHROW(validate_bundle(json::parse(a)));

    // The echoed config alone reproduces the run.
    REQUIRE(cli(dir, "--config a/resolved_config.toml --out c train").code == 0);
    CHECK(slurp(dir / "c" / "bundle.json") == a);

    REQUIRE(cli(dir, "--config fast.toml --seed 2 --out d train train.csv").code == 0);
    CHECK(slurp(dir / "d" / "bundle.json") != a);
}

TEST_CASE("excluding a confirmed fault tightens the KPI limit") {
    const fs::path dir = fast_project("exclude");
    REQUIRE(cli(dir, "--out . gen --train-days 2 --monitor-days 1 --fault mean-shift:turbine_flow:20:8:6").code == 0);
    REQUIRE(cli(dir, "--config fast.toml --out plain train train.csv").code == 0);
    REQUIRE(cli(dir, "--config fast.toml --out excl train train.csv --fault-log faults.csv").code == 0);
    const json plain = json::parse(slurp(dir / "plain" / "bundle.json"));
    const json excl = json::parse(slurp(dir / "excl" / "bundle.json"));
    CHECK(excl["baseline"]["lcl"].get<double>() > plain["baseline"]["lcl"].get<double>());
    CHECK(plain["training"]["rows_used"].get<int>() - excl["training"]["rows_used"].get<int>() == 480);
}

TEST_CASE("monitor reports the faulted variable") {
    const fs::path dir = fast_project("monitor");
    REQUIRE(cli(dir, "--out . gen --train-days 2 --monitor-days 1 --fault mean-shift:gen_temp_2:54:12:6").code == 0);
    REQUIRE(cli(dir, "--config fast.toml --out . train train.csv").code == 0);
    const Run r = cli(dir, "--config fast.toml --out . monitor stream.csv");
    REQUIRE(r.code == 0);
    for (const char* f : {"kpi.csv", "t2.csv", "warnings.json", "contributions.json", "monitor.svg"}) {
        CHECK(fs::exists(dir / f));
    }
    const json som = events_of(json::parse(slurp(dir / "warnings.json")), "som-kpi");
    REQUIRE_FALSE(som.empty());
    CHECK(som[0]["implicated"][0]["variable"] == "gen_temp_2");
    CHECK(slurp(dir / "monitor.svg").find("<svg") == 0);

    REQUIRE(cli(dir, "--config fast.toml --out j --format json monitor stream.csv --bundle bundle.json").code == 0);
    CHECK(json::parse(slurp(dir / "j" / "kpi.json")).size() == 1440);
}

TEST_CASE("an empty stream exits 0 with empty outputs") {
    const fs::path dir = fast_project("empty");
    REQUIRE(cli(dir, "--out . gen --train-days 2 --monitor-days 1").code == 0);
    REQUIRE(cli(dir, "--config fast.toml --out . train train.csv").code == 0);
    std::ofstream(dir / "blank.csv").flush();
    for (const char* input : {"blank.csv", "header.csv"}) {
        if (std::string(input) == "header.csv") {
            const std::string stream = slurp(dir / "stream.csv");
            std::ofstream(dir / input) << stream.substr(0, stream.find('\n') + 1);
        }
        const Run r = cli(dir, std::string("--config fast.toml --out e monitor --bundle bundle.json ") + input);
        CHECK(r.code == 0);
        CHECK_FALSE(r.err.empty());
        CHECK(json::parse(slurp(dir / "e" / "warnings.json"))["events"].empty());
    }
}

TEST_CASE("a stream lacking a bundle variable is invalid input") {
    const fs::path dir = fast_project("lacking");
    REQUIRE(cli(dir, "--out . gen --train-days 2 --monitor-days 1").code == 0);
    REQUIRE(cli(dir, "--config fast.toml --out . train train.csv").code == 0);
    std::ofstream(dir / "partial.csv") << "timestamp,gen_temp_1\n2018-01-03T00:00:00Z,1\n";
    const Run r = cli(dir, "--config fast.toml --out . monitor partial.csv");
    CHECK(r.code == 2);
    CHECK(r.err.find("gen_temp_2") != std::string::npos);
}

TEST_CASE("a corrupt bundle is rejected by the schema check") {
    const fs::path dir = fast_project("corrupt");
    REQUIRE(cli(dir, "--out . gen --train-days 2 --monitor-days 1").code == 0);
    REQUIRE(cli(dir, "--config fast.toml --out . train train.csv").code == 0);
    json b = json::parse(slurp(dir / "bundle.json"));
    b["baseline"]["filter"]["window"] = 0;
    std::ofstream(dir / "bad.json") << b.dump();
    const Run r = cli(dir, "--config fast.toml --out . monitor stream.csv --bundle bad.json");
    CHECK(r.code == 2);
    CHECK(r.err.find("/baseline/filter/window") != std::string::npos);
}

TEST_CASE("retrain archives the old bundle and accumulates history") {
    const fs::path dir = fast_project("retrain");
    REQUIRE(cli(dir, "--out . gen --train-days 2 --monitor-days 1 --fault mean-shift:vibration_x:60:4:6").code == 0);
    REQUIRE(cli(dir, "--config fast.toml --out . train train.csv").code == 0);
    const json before = json::parse(slurp(dir / "bundle.json"));

    // No new data and no log change: same statistics.
    REQUIRE(cli(dir, "--out same retrain --bundle bundle.json --history train.csv").code == 0);
    const json same = json::parse(slurp(dir / "same" / "bundle.json"));
    for (const char* k : {"dm_delta", "kpi_mean", "kpi_std", "lcl"}) {
        CHECK(std::abs(same["baseline"][k].get<double>() - before["baseline"][k].get<double>()) <= 1e-12);
    }
    CHECK(slurp(dir / "same" / "history.csv") == slurp(dir / "train.csv"));
    std::size_t archived = 0;
    for (const auto& e : fs::directory_iterator(dir / "same" / "archive")) {
        archived += 1;
        CHECK(slurp(e.path()) == slurp(dir / "bundle.json"));
    }
    CHECK(archived == 1);

    // Append the monitoring day, then confirm its fault window.
    const Run grow = cli(dir, "--out grow retrain --bundle bundle.json --history train.csv --new stream.csv "
                              "--fault-log faults.csv");
    REQUIRE(grow.code == 0);
    const json grown = json::parse(slurp(dir / "grow" / "bundle.json"));
    CHECK(grown["training"]["rows_input"].get<int>() == 3 * 1440);
    CHECK(grown["training"]["rows_excluded"].get<int>() == 240);
    CHECK(read_frame_csv_file((dir / "grow" / "history.csv").string()).rows() == 3 * 1440);
    CHECK(fs::exists(dir / "bundle.json"));
}

TEST_CASE("bench writes one row per scenario and detector") {
    const fs::path dir = scratch("bench");
    const Run r = cli(dir, "--out . --format json bench desk-bench-quick --seeds 1");
    REQUIRE(r.code == 0);
    const std::string csv = slurp(dir / "bench.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
    CHECK(fs::exists(dir / "bench.md"));
    CHECK(fs::exists(dir / "bench_runs.csv"));
    const json j = json::parse(slurp(dir / "bench.json"));
    REQUIRE(j["rows"].size() == 10);
    CHECK(j["rows"][0]["scenario"] == "nominal");
    CHECK(j["rows"][1]["detector"] == "hotelling-t2");
    CHECK(cli(dir, "bench no-such-suite").code == 2);
}
