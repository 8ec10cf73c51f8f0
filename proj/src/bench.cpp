#include "somcm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "somcm/error.hpp"
#include "somcm/pipeline.hpp"

namespace somcm {

namespace {

constexpr std::size_t kDay = 1440;

std::vector<BenchScenario> desk_scenarios() {
    return {
        {"nominal", std::nullopt, 0.0},
        {"mean-shift", FaultType::MeanShift, 4.0},
        {"drift", FaultType::Drift, 4.0},
        {"sensor-freeze", FaultType::SensorFreeze, 0.0},
        {"variance-inflation", FaultType::VarianceInflation, 3.0},
    };
}

std::string num(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string opt_num(const std::optional<double>& v, int digits = 1) {
    return v ? num(*v, digits) : std::string();
}

std::string ratio(std::size_t a, std::size_t b) {
    return b == 0 ? std::string() : num(static_cast<double>(a) / static_cast<double>(b), 3);
}

BenchRun score_run(const BenchScenario& scenario, const std::string& detector, std::uint64_t seed,
                   const std::vector<WarningEvent>& events, const std::vector<FaultSpec>& faults,
                   const std::vector<std::string>& active_ids, const std::string& fault_id,
                   std::size_t window, std::size_t length, double threshold) {
    const ScoreResult s = score(events, faults, window, length);
    BenchRun run;
    run.scenario = scenario.name;
    run.detector = detector;
    run.seed = seed;
    run.events = s.events;
    run.false_positives = s.false_positives;
    if (faults.empty()) {
        return run;
    }
    run.fault_variable = fault_id;
    const FaultScore& f = s.faults.front();
    run.detected = f.detected;
    run.delay = f.delay;
    if (f.detected && detector == "som-kpi") {
        const auto it = std::find_if(events.begin(), events.end(),
                                     [&](const WarningEvent& e) { return e.id == *f.event_id; });
        bool match = false;
        if (it != events.end() && !it->ratios_at_extreme.empty()) {
            const auto& r = it->ratios_at_extreme;
            const auto top = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
            match = r[top] > threshold && active_ids[top] == fault_id;
        }
        run.top_match = match;
    }
    return run;
}

BenchRow aggregate(const std::vector<BenchRun>& runs, const std::string& scenario,
                   const std::string& detector, std::size_t monitor_samples, std::size_t prompt_limit) {
    BenchRow row;
    row.scenario = scenario;
    row.detector = detector;
    std::vector<double> delays;
    const double windows = static_cast<double>(monitor_samples) / static_cast<double>(10 * kDay);
    for (const auto& r : runs) {
        if (r.scenario != scenario || r.detector != detector) {
            continue;
        }
        ++row.runs;
        row.false_positives += r.false_positives;
        if (static_cast<double>(r.false_positives) <= windows) {
            ++row.runs_within_fp_budget;
        }
        if (r.fault_variable) {
            ++row.faulted_runs;
        }
        if (r.detected) {
            ++row.detected;
            delays.push_back(static_cast<double>(*r.delay));
            if (*r.delay <= prompt_limit) {
                ++row.detected_prompt;
            }
        }
        if (r.top_match) {
            ++row.top_checked;
            row.top_matches += *r.top_match ? 1 : 0;
        }
    }
    if (row.runs > 0) {
        row.fp_per_10_days = static_cast<double>(row.false_positives) /
                             (static_cast<double>(row.runs) * windows);
    }
    if (!delays.empty()) {
        double sum = 0.0;
        for (double d : delays) {
            sum += d;
        }
        row.mean_delay = sum / static_cast<double>(delays.size());
        std::sort(delays.begin(), delays.end());
        const std::size_t m = delays.size() / 2;
        row.median_delay = delays.size() % 2 == 1 ? delays[m] : 0.5 * (delays[m - 1] + delays[m]);
    }
    return row;
}

}  // namespace

BenchSuite bench_suite(const std::string& name) {
    BenchSuite suite;
    suite.name = name;
    suite.train_samples = 30 * kDay;
    suite.monitor_samples = 10 * kDay;
    suite.fault_onset = 3 * kDay;
    suite.fault_duration = 2 * kDay;
    suite.scenarios = desk_scenarios();
    if (name == "desk-bench") {
        suite.seeds = 20;
    } else if (name == "desk-bench-quick") {
        suite.seeds = 3;
    } else {
        throw Error(ErrorKind::InvalidInput,
                    "unknown suite '" + name + "' (expected desk-bench or desk-bench-quick)");
    }
    return suite;
}

BenchReport run_bench(const BenchSuite& suite, const ProjectConfig& config, const BenchProgress& progress) {
    const auto t0 = std::chrono::steady_clock::now();
    BenchReport report;
    report.suite = suite.name;
    report.seeds = suite.seeds;
    report.monitor_samples = suite.monitor_samples;
    const FilterConfig filter = config.filter_config();
    report.prompt_limit = filter.window + config.monitor.persistence.open_after;
    const std::size_t total = suite.train_samples + suite.monitor_samples;

    for (std::size_t s = 0; s < suite.seeds; ++s) {
        const std::uint64_t seed = suite.first_seed + s;
        const SignalSpec spec = desk_bench_spec(total, seed);
        report.period_seconds = spec.period_seconds;
        const std::size_t variable = static_cast<std::size_t>(seed % spec.variables.size());
        const std::string& fault_id = spec.variables[variable].id;

        const SyntheticData nominal = generate(spec);
        const TrainOutcome trained =
            train_bundle(nominal.frame.slice(0, suite.train_samples), {}, config);
        if (progress) {
            progress("seed " + std::to_string(seed) + ": trained on " +
                     std::to_string(trained.bundle.training.rows_used) + " rows");
        }

        for (const auto& scenario : suite.scenarios) {
            std::vector<FaultSpec> faults;
            if (scenario.fault) {
                faults.push_back({*scenario.fault, variable, suite.train_samples + suite.fault_onset,
                                  suite.fault_duration, scenario.magnitude});
            }
            const SyntheticData data = faults.empty() ? nominal : generate(spec, faults);
            const ObservationFrame stream = data.frame.slice(suite.train_samples, total);
            const MonitorOutput out = monitor_stream(trained.bundle, stream, config.monitor);

            std::vector<FaultSpec> local = faults;
            for (auto& f : local) {
                f.onset -= suite.train_samples;
            }
            const double threshold = config.monitor.contribution_threshold;
            report.runs.push_back(score_run(scenario, "som-kpi", seed, out.som_events, local, out.active_ids,
                                            fault_id, filter.window, stream.rows(), threshold));
            report.runs.push_back(score_run(scenario, "hotelling-t2", seed, out.t2_events, local,
                                            out.active_ids, fault_id, filter.window, stream.rows(), threshold));
        }
    }

    for (const auto& scenario : suite.scenarios) {
        for (const char* detector : {"som-kpi", "hotelling-t2"}) {
            report.rows.push_back(
                aggregate(report.runs, scenario.name, detector, suite.monitor_samples, report.prompt_limit));
        }
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::string bench_csv(const BenchReport& report) {
    std::ostringstream o;
    o << "scenario,detector,runs,detected,detection_rate,detected_within_w_k,mean_delay_samples,"
         "median_delay_samples,false_positives,fp_per_10_days,runs_within_fp_budget,top_contribution_match\n";
    for (const auto& r : report.rows) {
        o << r.scenario << ',' << r.detector << ',' << r.runs << ',' << r.detected << ','
          << ratio(r.detected, r.faulted_runs) << ',' << r.detected_prompt << ',' << opt_num(r.mean_delay) << ','
          << opt_num(r.median_delay) << ',' << r.false_positives << ',' << num(r.fp_per_10_days, 3) << ','
          << r.runs_within_fp_budget << ',' << ratio(r.top_matches, r.top_checked) << '\n';
    }
    return o.str();
}

std::string bench_markdown(const BenchReport& report) {
    std::ostringstream o;
    o << "# " << report.suite << "\n\n";
    o << report.seeds << " seeds, " << report.monitor_samples << " monitoring samples per run, W+K = "
      << report.prompt_limit << " samples, " << num(report.seconds, 1) << " s.\n\n";
    o << "| scenario | detector | detected | within W+K | mean delay | median delay | FP events | FP / 10 d "
         "| runs with <=1 FP / 10 d | top contribution |\n";
    o << "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : report.rows) {
        const bool faulted = r.faulted_runs > 0;
        o << "| " << r.scenario << " | " << r.detector << " | "
          << (faulted ? std::to_string(r.detected) + "/" + std::to_string(r.faulted_runs) : "-") << " | "
          << (faulted ? std::to_string(r.detected_prompt) : "-") << " | "
          << (r.mean_delay ? opt_num(r.mean_delay) : "-") << " | "
          << (r.median_delay ? opt_num(r.median_delay) : "-") << " | " << r.false_positives << " | "
          << num(r.fp_per_10_days, 3) << " | " << r.runs_within_fp_budget << "/" << r.runs << " | "
          << (r.top_checked > 0 ? std::to_string(r.top_matches) + "/" + std::to_string(r.top_checked) : "-")
          << " |\n";
    }
    return o.str();
}

std::string bench_runs_csv(const BenchReport& report) {
    std::ostringstream o;
    o << "scenario,detector,seed,fault_variable,events,false_positives,detected,delay_samples,top_match\n";
    for (const auto& r : report.runs) {
        o << r.scenario << ',' << r.detector << ',' << r.seed << ',' << r.fault_variable.value_or("") << ','
          << r.events << ',' << r.false_positives << ',' << (r.detected ? 1 : 0) << ','
          << (r.delay ? std::to_string(*r.delay) : "") << ','
          << (r.top_match ? (*r.top_match ? "1" : "0") : "") << '\n';
    }
    return o.str();
}

nlohmann::json bench_json(const BenchReport& report) {
    using nlohmann::json;
    const auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"scenario", r.scenario},
                        {"detector", r.detector},
                        {"runs", r.runs},
                        {"faulted_runs", r.faulted_runs},
                        {"detected", r.detected},
                        {"detected_within_w_k", r.detected_prompt},
                        {"mean_delay_samples", opt(r.mean_delay)},
                        {"median_delay_samples", opt(r.median_delay)},
                        {"false_positives", r.false_positives},
                        {"fp_per_10_days", r.fp_per_10_days},
                        {"runs_within_fp_budget", r.runs_within_fp_budget},
                        {"top_matches", r.top_matches},
                        {"top_checked", r.top_checked}});
    }
    json runs = json::array();
    for (const auto& r : report.runs) {
        runs.push_back({{"scenario", r.scenario},
                        {"detector", r.detector},
                        {"seed", r.seed},
                        {"fault_variable", opt(r.fault_variable)},
                        {"events", r.events},
                        {"false_positives", r.false_positives},
                        {"detected", r.detected},
                        {"delay_samples", opt(r.delay)},
                        {"top_match", opt(r.top_match)}});
    }
    return {{"suite", report.suite},        {"seeds", report.seeds},
            {"monitor_samples", report.monitor_samples}, {"prompt_limit", report.prompt_limit},
            {"seconds", report.seconds},    {"rows", std::move(rows)},
            {"runs", std::move(runs)}};
}

}  // namespace somcm
