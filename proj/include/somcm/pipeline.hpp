#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "somcm/bundle.hpp"
#include "somcm/config.hpp"
#include "somcm/io.hpp"

namespace somcm {

struct TrainOutcome {
    Bundle bundle;
    CleaningReport cleaning;
};

/// clean -> exclude fault windows -> normalize -> SOM -> KPI baseline ->
/// Hotelling baseline. Limits from the config override the frame's.
TrainOutcome train_bundle(const ObservationFrame& raw, const FaultWindowLog& log,
                          const ProjectConfig& config);

struct MonitorOutput {
    std::vector<KpiRow> kpi;
    std::vector<T2Point> t2;
    std::vector<WarningEvent> som_events;
    std::vector<WarningEvent> t2_events;
    std::vector<std::string> active_ids;
};

/// Runs both charts over `stream` in timestamp order. Stream columns are
/// matched to bundle variables by id; a bundle variable absent from the
/// stream is an InvalidInput error, extra columns are ignored.
MonitorOutput monitor_stream(const Bundle& bundle, const ObservationFrame& stream,
                             const MonitorSettings& settings);

nlohmann::json warnings_json(const MonitorOutput& out);
nlohmann::json contributions_json(const MonitorOutput& out, double threshold);

struct RetrainOutcome {
    TrainOutcome trained;
    ObservationFrame history;  // raw rows the new bundle was trained on
    std::size_t rows_appended = 0;
    std::size_t rows_skipped = 0;  // new rows not later than the history
};

/// Appends rows of `fresh` later than the end of `history` and retrains with
/// `config` and the updated fault log.
RetrainOutcome retrain_bundle(const ObservationFrame& history, const ObservationFrame* fresh,
                              const FaultWindowLog& log, const ProjectConfig& config);

/// Human-readable cleaning summary.
std::string describe_cleaning(const CleaningReport& report);
nlohmann::json cleaning_json(const CleaningReport& report);

}  // namespace somcm
