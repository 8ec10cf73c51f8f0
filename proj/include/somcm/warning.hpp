#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "somcm/types.hpp"

namespace somcm {

struct PersistenceConfig {
    std::size_t open_after = 3;    // K consecutive out-of-control points open an event
    std::size_t close_after = 60;  // M consecutive in-control points close it
};

/// Debounces a chart status stream into non-overlapping episodes.
/// No-data points leave the machine untouched.
class PersistenceMachine {
public:
    enum class Transition { None, Opened, Closed };

    explicit PersistenceMachine(PersistenceConfig config = {});

    Transition update(ChartStatus status);

    bool active() const noexcept { return active_; }
    std::size_t out_run() const noexcept { return out_run_; }
    const PersistenceConfig& config() const noexcept { return config_; }

private:
    PersistenceConfig config_;
    bool active_ = false;
    std::size_t out_run_ = 0;
    std::size_t in_run_ = 0;
};

struct ImplicatedVariable {
    std::size_t variable = 0;  // index into the active-variable list
    double peak_ratio = 0.0;
};

/// A contiguous out-of-control episode of one detector.
struct WarningEvent {
    std::size_t id = 0;
    std::string detector;
    Timestamp start_time = 0;
    std::size_t start_index = 0;
    std::optional<Timestamp> end_time;  // empty while the event is open
    std::optional<std::size_t> end_index;

    // Extreme of the monitored statistic inside the event: the minimum
    // filtered KPI for the SOM detector, the maximum t^2 for Hotelling.
    double extreme_value = 0.0;
    Timestamp extreme_time = 0;
    std::size_t extreme_index = 0;

    // SOM detector only. Sorted by descending peak ratio.
    std::vector<ImplicatedVariable> implicated;
    std::vector<double> ratios_at_extreme;
    std::vector<std::size_t> flagged_at_extreme;
    bool neutral_at_extreme = false;

    bool open() const noexcept { return !end_time.has_value(); }
};

}  // namespace somcm
