#include "somcm/pipeline.hpp"

#include <cstdio>
#include <sstream>

#include "somcm/error.hpp"
#include "somcm/timeutil.hpp"

namespace somcm {

using nlohmann::json;

TrainOutcome train_bundle(const ObservationFrame& raw, const FaultWindowLog& log,
                          const ProjectConfig& config) {
    require(raw.rows() > 0, ErrorKind::EmptyTrainingSet, "training data has no rows");
    CleanResult cleaned = clean(raw, config.cleaning);
    const ExclusionResult excluded = exclude_fault_windows(cleaned.frame, log);
    const NormalizedData nd = normalize(excluded.frame, config.normalization);

    SomModel model = train_batch(nd.data, config.train);
    NominalBaseline baseline = compute_baseline(model, nd.data, config.filter_config(), nd.stats);
    HotellingBaseline hotelling = fit_hotelling(nd.data, config.hotelling);

    TrainingSummary summary;
    summary.rows_input = raw.rows();
    summary.rows_excluded = excluded.rows_excluded;
    summary.rows_dropped = nd.rows_dropped;
    summary.rows_used = static_cast<std::size_t>(nd.data.rows());
    summary.fault_windows = excluded.merged;

    std::vector<VariableInfo> vars = cleaned.frame.variables();
    for (auto& v : vars) {
        const auto it = config.cleaning.limits.find(v.id);
        if (it != config.cleaning.limits.end()) {
            v.min_limit = it->second.min ? it->second.min : v.min_limit;
            v.max_limit = it->second.max ? it->second.max : v.max_limit;
        }
    }
    ProjectConfig recorded = config;
    recorded.output = {};
    Bundle bundle{std::move(vars),        std::move(model),   std::move(baseline),
                  std::move(hotelling),   std::move(summary), render_config(recorded)};
    return {std::move(bundle), std::move(cleaned.report)};
}

MonitorOutput monitor_stream(const Bundle& bundle, const ObservationFrame& stream,
                             const MonitorSettings& settings) {
    std::vector<std::size_t> column;
    column.reserve(bundle.variables.size());
    for (const auto& v : bundle.variables) {
        const auto j = stream.find_variable(v.id);
        require(j.has_value(), ErrorKind::InvalidInput,
                "stream lacks variable '" + v.id + "' required by the bundle");
        column.push_back(*j);
    }

    MonitorOutput out;
    for (std::size_t j : active_indices(bundle.baseline.norm_stats)) {
        out.active_ids.push_back(bundle.variables[j].id);
    }
    KpiMonitor kpi(bundle.model, bundle.baseline, settings);
    T2Monitor t2(bundle.hotelling, settings.persistence);
    out.kpi.reserve(stream.rows());
    out.t2.reserve(stream.rows());

    RowVector raw(static_cast<Eigen::Index>(column.size()));
    for (std::size_t r = 0; r < stream.rows(); ++r) {
        for (std::size_t k = 0; k < column.size(); ++k) {
            raw(static_cast<Eigen::Index>(k)) =
                stream.valid(r, column[k])
                    ? stream.values()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(column[k]))
                    : kNaN;
        }
        const RowVector pattern = normalize_row(bundle.baseline.norm_stats, raw);
        const Timestamp ts = stream.timestamps()[r];
        const KpiMonitor::Step s = kpi.step(ts, pattern);
        out.kpi.push_back({s.point, s.active_event});
        out.t2.push_back(t2.step(ts, pattern).point);
    }
    out.som_events = kpi.events();
    out.t2_events = t2.events();
    return out;
}

namespace {

json time_or_null(const std::optional<Timestamp>& t) {
    return t ? json(format_iso8601(*t)) : json(nullptr);
}

json event_json(const WarningEvent& e, const std::vector<std::string>& ids) {
    json j = {
        {"id", e.id},
        {"detector", e.detector},
        {"start", format_iso8601(e.start_time)},
        {"end", time_or_null(e.end_time)},
        {"start_index", e.start_index},
        {"end_index", e.end_index ? json(*e.end_index) : json(nullptr)},
        {"extreme_value", e.extreme_value},
        {"extreme_time", format_iso8601(e.extreme_time)},
    };
    if (e.detector == "som-kpi") {
        json implicated = json::array();
        for (const auto& v : e.implicated) {
            implicated.push_back({{"variable", ids.at(v.variable)}, {"peak_ratio", v.peak_ratio}});
        }
        j["implicated"] = std::move(implicated);
    }
    return j;
}

}  // namespace

json warnings_json(const MonitorOutput& out) {
    json events = json::array();
    for (const auto& e : out.som_events) {
        events.push_back(event_json(e, out.active_ids));
    }
    for (const auto& e : out.t2_events) {
        events.push_back(event_json(e, out.active_ids));
    }
    return {{"events", std::move(events)}};
}

json contributions_json(const MonitorOutput& out, double threshold) {
    json events = json::array();
    for (const auto& e : out.som_events) {
        json ratios = json::object();
        for (std::size_t k = 0; k < e.ratios_at_extreme.size(); ++k) {
            ratios[out.active_ids[k]] = e.ratios_at_extreme[k];
        }
        json flagged = json::array();
        for (std::size_t k : e.flagged_at_extreme) {
            flagged.push_back(out.active_ids[k]);
        }
        events.push_back({
            {"event_id", e.id},
            {"at", format_iso8601(e.extreme_time)},
            {"filtered_kpi", e.extreme_value},
            {"ratio", e.ratios_at_extreme},
            {"ratios", std::move(ratios)},
            {"flagged", std::move(flagged)},
            {"neutral", e.neutral_at_extreme},
        });
    }
    return {{"variables", out.active_ids}, {"threshold", threshold}, {"events", std::move(events)}};
}

RetrainOutcome retrain_bundle(const ObservationFrame& history, const ObservationFrame* fresh,
                              const FaultWindowLog& log, const ProjectConfig& config) {
    ObservationFrame merged = history;
    std::size_t skipped = 0;
    std::size_t appended = 0;
    if (fresh != nullptr && fresh->rows() > 0) {
        const bool has_history = history.rows() > 0;
        std::size_t first = 0;
        while (has_history && first < fresh->rows() &&
               fresh->timestamps()[first] <= history.timestamps().back()) {
            ++first;
        }
        skipped = first;
        appended = fresh->rows() - first;
        if (appended > 0) {
            ObservationFrame tail = fresh->slice(first, fresh->rows());
            if (has_history) {
                require(tail.cols() == history.cols(), ErrorKind::InvalidInput,
                        "new data has " + std::to_string(tail.cols()) + " variables, history has " +
                            std::to_string(history.cols()));
                merged.append(tail);
            } else {
                merged = std::move(tail);
            }
        }
    }
    TrainOutcome trained = train_bundle(merged, log, config);
    return {std::move(trained), std::move(merged), appended, skipped};
}

std::string describe_cleaning(const CleaningReport& report) {
    std::ostringstream o;
    o << "rows: " << report.rows << "\n";
    o << "variable";
    for (std::size_t f = 0; f < kCellFlagCount; ++f) {
        o << '\t' << to_string(static_cast<CellFlag>(f));
    }
    o << "\tregular\n";
    for (const auto& v : report.variables) {
        o << v.id;
        for (std::size_t c : v.counts) {
            o << '\t' << c;
        }
        char pct[32];
        std::snprintf(pct, sizeof(pct), "%.2f%%", 100.0 * v.regular_fraction);
        o << '\t' << pct << '\n';
    }
    char thr[32];
    std::snprintf(thr, sizeof(thr), "%.2f%%", 100.0 * report.threshold);
    o << "below threshold (" << thr << "):";
    if (report.below_threshold.empty()) {
        o << " none";
    }
    for (const auto& id : report.below_threshold) {
        o << ' ' << id;
    }
    o << '\n';
    return o.str();
}

json cleaning_json(const CleaningReport& report) {
    json vars = json::array();
    for (const auto& v : report.variables) {
        json counts = json::object();
        for (std::size_t f = 0; f < kCellFlagCount; ++f) {
            counts[to_string(static_cast<CellFlag>(f))] = v.counts[f];
        }
        vars.push_back({{"id", v.id}, {"counts", std::move(counts)}, {"regular_fraction", v.regular_fraction}});
    }
    return {{"rows", report.rows},
            {"threshold", report.threshold},
            {"variables", std::move(vars)},
            {"below_threshold", report.below_threshold}};
}

}  // namespace somcm
