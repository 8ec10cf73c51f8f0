#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "somcm/config.hpp"
#include "somcm/synthetic.hpp"

namespace somcm {

struct BenchScenario {
    std::string name;
    std::optional<FaultType> fault;  // empty: all-nominal
    double magnitude = 0.0;
};

/// Each seed trains one bundle on the nominal training span and monitors
/// every scenario on the following span. The faulted variable rotates with
/// the seed.
struct BenchSuite {
    std::string name;
    std::size_t train_samples = 0;
    std::size_t monitor_samples = 0;
    std::size_t seeds = 0;
    std::uint64_t first_seed = 1;
    std::size_t fault_onset = 0;     // into the monitoring span
    std::size_t fault_duration = 0;
    std::vector<BenchScenario> scenarios;
};

/// "desk-bench" (30 + 10 days, 20 seeds) or "desk-bench-quick" (3 seeds).
/// Unknown names throw InvalidInput.
BenchSuite bench_suite(const std::string& name);

struct BenchRun {
    std::string scenario;
    std::string detector;
    std::uint64_t seed = 0;
    std::optional<std::string> fault_variable;
    std::size_t events = 0;
    std::size_t false_positives = 0;
    bool detected = false;
    std::optional<std::size_t> delay;
    std::optional<bool> top_match;  // SOM detector on detected faults
};

struct BenchRow {
    std::string scenario;
    std::string detector;
    std::size_t runs = 0;
    std::size_t faulted_runs = 0;
    std::size_t detected = 0;
    std::size_t detected_prompt = 0;  // delay <= W + K
    std::optional<double> mean_delay;
    std::optional<double> median_delay;
    std::size_t false_positives = 0;
    double fp_per_10_days = 0.0;
    std::size_t runs_within_fp_budget = 0;  // at most one FP per 10 days
    std::size_t top_matches = 0;
    std::size_t top_checked = 0;
};

struct BenchReport {
    std::string suite;
    std::size_t seeds = 0;
    std::size_t monitor_samples = 0;
    double period_seconds = 60.0;
    std::size_t prompt_limit = 0;  // W + K
    std::vector<BenchRun> runs;
    std::vector<BenchRow> rows;  // scenarios x detectors, suite order
    double seconds = 0.0;
};

using BenchProgress = std::function<void(const std::string&)>;

/// Training and monitoring use `config`; its data paths are ignored.
BenchReport run_bench(const BenchSuite& suite, const ProjectConfig& config,
                      const BenchProgress& progress = {});

std::string bench_csv(const BenchReport& report);
std::string bench_markdown(const BenchReport& report);
std::string bench_runs_csv(const BenchReport& report);
nlohmann::json bench_json(const BenchReport& report);

}  // namespace somcm
