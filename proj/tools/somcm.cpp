#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "somcm/bench.hpp"
#include "somcm/bundle.hpp"
#include "somcm/config.hpp"
#include "somcm/error.hpp"
#include "somcm/io.hpp"
#include "somcm/pipeline.hpp"
#include "somcm/svg.hpp"
#include "somcm/synthetic.hpp"
#include "somcm/timeutil.hpp"

namespace fs = std::filesystem;
using namespace somcm;

namespace {

enum Exit { kOk = 0, kInternal = 1, kInvalidInput = 2, kConfig = 3 };

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "csv";
};

struct Context {
    ProjectConfig config;
    fs::path out;
    bool json = false;
};

Context make_context(const Globals& g) {
    Context ctx;
    ctx.config = g.config_path.empty() ? load_config({}) : load_config_file(g.config_path);
    if (g.seed) {
        ctx.config.train.seed = *g.seed;
    }
    if (!g.out.empty()) {
        ctx.config.output.dir = g.out;
    }
    ctx.out = ctx.config.output.dir;
    ctx.json = g.format == "json";
    fs::create_directories(ctx.out);
    return ctx;
}

void echo_config(const fs::path& out, const ProjectConfig& config) {
    write_text_file((out / "resolved_config.toml").string(), render_config(config));
}

// A positional path overrides the config entry so the echo reproduces the run.
std::string resolve_path(const std::string& flag, std::string& entry, const char* what) {
    if (!flag.empty()) {
        entry = fs::absolute(flag).lexically_normal().string();
    }
    if (entry.empty()) {
        throw Error(ErrorKind::ConfigError, std::string("no ") + what + " given (flag or config)");
    }
    if (!fs::exists(entry)) {
        throw Error(ErrorKind::ConfigError, std::string(what) + " not found: " + entry);
    }
    return entry;
}

std::string num(double v) {
    return format_number(v);
}

void print_bundle_summary(const Bundle& b) {
    std::cout << "rows used: " << b.training.rows_used << " (excluded " << b.training.rows_excluded
              << ", dropped " << b.training.rows_dropped << ")\n";
    std::cout << "grid: " << b.model.topology().rows << "x" << b.model.topology().cols << "\n";
    std::cout << "DM_delta: " << num(b.baseline.dm_delta) << "\n";
    std::cout << "LCL_kpi: " << num(b.baseline.lcl) << "\n";
    std::cout << "UCL_t2: " << num(b.hotelling.ucl()) << "\n";
}

// ---- gen ------------------------------------------------------------------

struct GenArgs {
    double train_days = 30.0;
    double monitor_days = 10.0;
    std::vector<std::string> faults;  // type:variable:start_hour:duration_hours[:magnitude]
};

FaultSpec parse_fault_arg(const std::string& text, const SignalSpec& spec) {
    std::vector<std::string> parts;
    std::size_t begin = 0;
    for (;;) {
        const std::size_t colon = text.find(':', begin);
        parts.push_back(text.substr(begin, colon - begin));
        if (colon == std::string::npos) {
            break;
        }
        begin = colon + 1;
    }
    require(parts.size() == 4 || parts.size() == 5, ErrorKind::InvalidInput,
            "fault '" + text + "': expected type:variable:start_hour:duration_hours[:magnitude]");
    FaultSpec f;
    f.type = parse_fault_type(parts[0]);
    std::optional<std::size_t> var;
    for (std::size_t j = 0; j < spec.variables.size(); ++j) {
        if (spec.variables[j].id == parts[1] || std::to_string(j) == parts[1]) {
            var = j;
        }
    }
    require(var.has_value(), ErrorKind::InvalidInput, "fault '" + text + "': unknown variable '" + parts[1] + "'");
    f.variable = *var;
    const double per_hour = 3600.0 / spec.period_seconds;
    try {
        f.onset = static_cast<std::size_t>(std::stod(parts[2]) * per_hour);
        f.duration = static_cast<std::size_t>(std::stod(parts[3]) * per_hour);
        f.magnitude = parts.size() == 5 ? std::stod(parts[4]) : 4.0;
    } catch (const std::exception&) {
        fail(ErrorKind::InvalidInput, "fault '" + text + "': bad number");
    }
    return f;
}

int cmd_gen(const Globals& g, const GenArgs& a) {
    const Context ctx = make_context(g);
    echo_config(ctx.out, ctx.config);
    const double per_day = 86400.0 / ctx.config.data.period_seconds;
    const auto train = static_cast<std::size_t>(a.train_days * per_day);
    const auto monitor = static_cast<std::size_t>(a.monitor_days * per_day);
    require(train > 0, ErrorKind::InvalidInput, "training span must hold at least one sample");
    SignalSpec spec = desk_bench_spec(train + monitor, g.seed.value_or(1));
    spec.period_seconds = ctx.config.data.period_seconds;
    std::vector<FaultSpec> faults;
    for (const auto& text : a.faults) {
        faults.push_back(parse_fault_arg(text, spec));
    }
    const SyntheticData data = generate(spec, faults);

    write_frame_csv_file((ctx.out / "train.csv").string(), data.frame.slice(0, train));
    write_frame_csv_file((ctx.out / "stream.csv").string(), data.frame.slice(train, train + monitor));
    write_labels_csv_file((ctx.out / "labels.csv").string(), data);
    std::vector<FaultWindow> windows;
    for (const auto& f : faults) {
        windows.push_back({data.frame.timestamps()[f.onset], data.frame.timestamps()[f.onset + f.duration - 1],
                           std::string(to_string(f.type)) + " " + spec.variables[f.variable].id});
    }
    write_fault_log_csv_file((ctx.out / "faults.csv").string(), windows);
    std::cout << "wrote " << train << " training and " << monitor << " monitoring rows, " << faults.size()
              << " fault(s) to " << ctx.out.string() << "\n";
    return kOk;
}

// ---- clean ----------------------------------------------------------------

int cmd_clean(const Globals& g, const std::string& input) {
    Context ctx = make_context(g);
    const std::string path = resolve_path(input, ctx.config.data.train, "input CSV");
    echo_config(ctx.out, ctx.config);
    const ObservationFrame raw = read_frame_csv_file(path);
    const CleanResult cleaned = clean(raw, ctx.config.cleaning);
    write_frame_csv_file((ctx.out / "cleaned.csv").string(), cleaned.frame);
    write_flags_csv_file((ctx.out / "flags.csv").string(), cleaned.frame);
    const std::string text = describe_cleaning(cleaned.report);
    const nlohmann::json j = cleaning_json(cleaned.report);
    write_text_file((ctx.out / "cleaning_report.txt").string(), text);
    write_text_file((ctx.out / "cleaning_report.json").string(), j.dump(2) + "\n");
    std::cout << (ctx.json ? j.dump(2) + "\n" : text);
    return kOk;
}

// ---- train ----------------------------------------------------------------

FaultWindowLog load_log(const std::string& flag, std::string& entry) {
    if (!flag.empty()) {
        entry = fs::absolute(flag).lexically_normal().string();
    }
    if (entry.empty()) {
        return {};
    }
    if (!fs::exists(entry)) {
        throw Error(ErrorKind::ConfigError, "fault log not found: " + entry);
    }
    return read_fault_log_csv_file(entry);
}

int cmd_train(const Globals& g, const std::string& input, const std::string& log_path) {
    Context ctx = make_context(g);
    const std::string path = resolve_path(input, ctx.config.data.train, "training CSV");
    const FaultWindowLog log = load_log(log_path, ctx.config.data.fault_log);
    echo_config(ctx.out, ctx.config);
    const ObservationFrame raw = read_frame_csv_file(path);
    const TrainOutcome t = train_bundle(raw, log, ctx.config);
    write_text_file((ctx.out / "bundle.json").string(), serialize_bundle(t.bundle));
    print_bundle_summary(t.bundle);
    return kOk;
}

// ---- monitor --------------------------------------------------------------

bool blank_file(const std::string& path) {
    const std::string text = read_text_file(path);
    return text.find_first_not_of(" \t\r\n") == std::string::npos;
}

nlohmann::json series_json(const MonitorOutput& out) {
    nlohmann::json kpi = nlohmann::json::array();
    for (const auto& r : out.kpi) {
        kpi.push_back({{"timestamp", format_iso8601(r.point.timestamp)},
                       {"raw_kpi", r.point.raw},
                       {"filtered_kpi", r.point.filtered},
                       {"status", to_string(r.point.status)},
                       {"active_warning_id", r.warning_id ? nlohmann::json(*r.warning_id) : nlohmann::json()}});
    }
    nlohmann::json t2 = nlohmann::json::array();
    for (const auto& p : out.t2) {
        t2.push_back({{"timestamp", format_iso8601(p.timestamp)}, {"t2", p.t2}, {"status", to_string(p.status)}});
    }
    return {{"kpi", std::move(kpi)}, {"t2", std::move(t2)}};
}

int cmd_monitor(const Globals& g, const std::string& bundle_path, const std::string& input) {
    Context ctx = make_context(g);
    const std::string stream_path = resolve_path(input, ctx.config.data.stream, "stream CSV");
    echo_config(ctx.out, ctx.config);
    const Bundle bundle = read_bundle_file(bundle_path.empty() ? (ctx.out / "bundle.json").string() : bundle_path);

    MonitorOutput out;
    bool empty = blank_file(stream_path);
    if (!empty) {
        const ObservationFrame stream = read_frame_csv_file(stream_path);
        empty = stream.rows() == 0;
        out = monitor_stream(bundle, stream, ctx.config.monitor);
    }
    if (empty) {
        for (std::size_t j : active_indices(bundle.baseline.norm_stats)) {
            out.active_ids.push_back(bundle.variables[j].id);
        }
        std::cerr << "warning: stream " << stream_path << " holds no rows; outputs are empty\n";
    }

    if (ctx.json) {
        const nlohmann::json s = series_json(out);
        write_text_file((ctx.out / "kpi.json").string(), s["kpi"].dump(1) + "\n");
        write_text_file((ctx.out / "t2.json").string(), s["t2"].dump(1) + "\n");
    } else {
        write_kpi_csv_file((ctx.out / "kpi.csv").string(), out.kpi);
        write_t2_csv_file((ctx.out / "t2.csv").string(), out.t2);
    }
    write_text_file((ctx.out / "warnings.json").string(), warnings_json(out).dump(2) + "\n");
    write_text_file((ctx.out / "contributions.json").string(),
                    contributions_json(out, ctx.config.monitor.contribution_threshold).dump(2) + "\n");
    if (ctx.config.output.plot) {
        write_text_file((ctx.out / "monitor.svg").string(),
                        render_monitor_svg(out, bundle.baseline.lcl, bundle.hotelling.ucl()));
    }

    std::cout << "rows: " << out.kpi.size() << "\n";
    std::cout << "som-kpi events: " << out.som_events.size() << "\n";
    for (const auto& e : out.som_events) {
        std::cout << "  #" << e.id << " " << format_iso8601(e.start_time) << " .. "
                  << (e.end_time ? format_iso8601(*e.end_time) : std::string("open")) << " min KPI "
                  << num(e.extreme_value);
        if (!e.implicated.empty()) {
            std::cout << " top " << out.active_ids[e.implicated.front().variable] << " ("
                      << num(e.implicated.front().peak_ratio) << ")";
        }
        std::cout << "\n";
    }
    std::cout << "hotelling-t2 events: " << out.t2_events.size() << "\n";
    return kOk;
}

// ---- retrain --------------------------------------------------------------

std::string utc_stamp() {
    const auto now = std::chrono::system_clock::now();
    return format_compact(std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

int cmd_retrain(const Globals& g, const std::string& bundle_path, const std::string& history_path,
                const std::string& fresh_path, const std::string& log_path) {
    const Context ctx = make_context(g);
    const fs::path old_path = bundle_path.empty() ? ctx.out / "bundle.json" : fs::path(bundle_path);
    const Bundle old = read_bundle_file(old_path.string());

    // The bundle's own config unless one is given on the command line.
    ProjectConfig config = ctx.config;
    if (g.config_path.empty()) {
        config = load_config(parse_config_text(old.config));
        if (g.seed) {
            config.train.seed = *g.seed;
        }
        config.output = ctx.config.output;
    }
    const std::string hist = resolve_path(history_path, config.data.train, "history CSV");
    const FaultWindowLog log = load_log(log_path, config.data.fault_log);
    echo_config(ctx.out, config);

    const ObservationFrame history = read_frame_csv_file(hist);
    std::optional<ObservationFrame> fresh;
    if (!fresh_path.empty() && !blank_file(fresh_path)) {
        fresh = read_frame_csv_file(fresh_path);
    }
    const RetrainOutcome r = retrain_bundle(history, fresh ? &*fresh : nullptr, log, config);

    const fs::path archive_dir = ctx.out / "archive";
    fs::create_directories(archive_dir);
    fs::path archived = archive_dir / ("bundle-" + utc_stamp() + ".json");
    for (int k = 1; fs::exists(archived); ++k) {
        archived = archive_dir / ("bundle-" + utc_stamp() + "-" + std::to_string(k) + ".json");
    }
    write_text_file(archived.string(), read_text_file(old_path.string()));
    write_text_file((ctx.out / "history.csv").string(), [&] {
        std::ostringstream o;
        write_frame_csv(o, r.history);
        return o.str();
    }());
    write_text_file((ctx.out / "bundle.json").string(), serialize_bundle(r.trained.bundle));

    std::cout << "archived previous bundle: " << archived.string() << "\n";
    std::cout << "rows appended: " << r.rows_appended << ", skipped (not newer): " << r.rows_skipped << "\n";
    std::cout << "DM_delta: " << num(old.baseline.dm_delta) << " -> " << num(r.trained.bundle.baseline.dm_delta)
              << "\n";
    std::cout << "LCL_kpi: " << num(old.baseline.lcl) << " -> " << num(r.trained.bundle.baseline.lcl) << "\n";
    std::cout << "UCL_t2: " << num(old.hotelling.ucl()) << " -> " << num(r.trained.bundle.hotelling.ucl())
              << "\n";
    std::cout << "rows used: " << old.training.rows_used << " -> " << r.trained.bundle.training.rows_used << "\n";
    return kOk;
}

// ---- bench ----------------------------------------------------------------

int cmd_bench(const Globals& g, const std::string& suite_name, std::optional<std::size_t> seeds) {
    const Context ctx = make_context(g);
    echo_config(ctx.out, ctx.config);
    BenchSuite suite = bench_suite(suite_name);
    if (seeds) {
        suite.seeds = *seeds;
    }
    if (g.seed) {
        suite.first_seed = *g.seed;
    }
    const BenchReport report = run_bench(suite, ctx.config, [](const std::string& line) {
        std::cerr << line << "\n";
    });
    write_text_file((ctx.out / "bench.csv").string(), bench_csv(report));
    write_text_file((ctx.out / "bench.md").string(), bench_markdown(report));
    write_text_file((ctx.out / "bench_runs.csv").string(), bench_runs_csv(report));
    if (ctx.json) {
        const std::string j = bench_json(report).dump(2) + "\n";
        write_text_file((ctx.out / "bench.json").string(), j);
        std::cout << j;
    } else {
        std::cout << bench_markdown(report);
    }
    return kOk;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ConfigError: return kConfig;
        case ErrorKind::ContractViolation: return kInternal;
        default: return kInvalidInput;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SOM condition monitoring with a Hotelling t^2 reference chart"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "Project config file");
    app.add_option("--seed", g.seed, "Seed for SOM initialisation and generated data");
    app.add_option("--out", g.out, "Output directory (overrides output.dir)");
    app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"csv", "json"}));

    std::function<int()> run;

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate desk-bench data: train.csv, stream.csv, labels.csv, faults.csv");
    gen_cmd->add_option("--train-days", gen.train_days, "Training span in days")->capture_default_str();
    gen_cmd->add_option("--monitor-days", gen.monitor_days, "Monitoring span in days")->capture_default_str();
    gen_cmd->add_option("--fault", gen.faults,
                        "type:variable:start_hour:duration_hours[:magnitude], hours from the start of training");
    gen_cmd->final_callback([&] { run = [&] { return cmd_gen(g, gen); }; });

    std::string clean_input;
    auto* clean_cmd = app.add_subcommand("clean", "Flag invalid cells and report per-variable quality");
    clean_cmd->add_option("input", clean_input, "Raw CSV (default data.train)");
    clean_cmd->final_callback([&] { run = [&] { return cmd_clean(g, clean_input); }; });

    std::string train_input;
    std::string train_log;
    auto* train_cmd = app.add_subcommand("train", "Train the SOM and both baselines into bundle.json");
    train_cmd->add_option("input", train_input, "Training CSV (default data.train)");
    train_cmd->add_option("--fault-log", train_log, "Fault-window CSV (default data.fault_log)");
    train_cmd->final_callback([&] { run = [&] { return cmd_train(g, train_input, train_log); }; });

    std::string mon_bundle;
    std::string mon_input;
    auto* mon_cmd = app.add_subcommand("monitor", "Run both charts over a stream");
    mon_cmd->add_option("input", mon_input, "Stream CSV (default data.stream)");
    mon_cmd->add_option("--bundle", mon_bundle, "Bundle file (default <out>/bundle.json)");
    mon_cmd->final_callback([&] { run = [&] { return cmd_monitor(g, mon_bundle, mon_input); }; });

    std::string re_bundle;
    std::string re_history;
    std::string re_new;
    std::string re_log;
    auto* re_cmd = app.add_subcommand("retrain", "Retrain on accumulated data with an updated fault log");
    re_cmd->add_option("--bundle", re_bundle, "Current bundle (default <out>/bundle.json)");
    re_cmd->add_option("--history", re_history, "Raw data the current bundle was trained on (default data.train)");
    re_cmd->add_option("--new", re_new, "Raw data recorded since");
    re_cmd->add_option("--fault-log", re_log, "Updated fault-window CSV (default data.fault_log)");
    re_cmd->final_callback([&] { run = [&] { return cmd_retrain(g, re_bundle, re_history, re_new, re_log); }; });

    std::string suite = "desk-bench";
    std::optional<std::size_t> seeds;
    auto* bench_cmd = app.add_subcommand("bench", "Compare the SOM KPI with Hotelling t^2 on synthetic faults");
    bench_cmd->add_option("suite", suite, "desk-bench or desk-bench-quick")->capture_default_str();
    bench_cmd->add_option("--seeds", seeds, "Override the number of seeds");
    bench_cmd->final_callback([&] { run = [&] { return cmd_bench(g, suite, seeds); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalidInput;
    }

    try {
        return run ? run() : kInternal;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalidInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}
