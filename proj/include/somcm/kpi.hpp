#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "somcm/contribution.hpp"
#include "somcm/preprocess.hpp"
#include "somcm/som.hpp"
#include "somcm/types.hpp"
#include "somcm/warning.hpp"

namespace somcm {

/// KPI(r) = 1 / (1 + |1 - DM(r) / DM_delta|), in (0, 1].
double kpi(double dm_delta, double dm_single);

/// Truncated exponentially weighted average over the last `window` samples.
struct FilterConfig {
    std::size_t window = 720;
    double lambda = 0.0;

    /// lambda chosen so that lambda^(window - 1) = 0.01.
    static FilterConfig for_window(std::size_t window);
    /// Window covering `horizon_seconds` at the given sampling period.
    static FilterConfig for_horizon(double horizon_seconds, double period_seconds);
};

/// Streaming form of the filter. Missing samples occupy a slot in the window
/// and the weights are renormalised over the samples present.
class EwmaFilter {
public:
    explicit EwmaFilter(FilterConfig config);

    std::optional<double> push(std::optional<double> raw);
    const FilterConfig& config() const noexcept { return config_; }

private:
    FilterConfig config_;
    std::vector<double> powers_;  // lambda^k, k = 0 .. window-1
    std::vector<double> ring_;    // last `window` raw values, NaN = absent
    std::size_t head_ = 0;        // slot of the next sample
    std::size_t seen_ = 0;
};

struct KpiPoint {
    Timestamp timestamp = 0;
    double raw = kNaN;
    double filtered = kNaN;
    ChartStatus status = ChartStatus::NoData;
};

/// Fills in `filtered` for every point; raw values of no-data points are
/// skipped. A point whose window holds no raw value is no-data.
/// Throws InvalidInput on non-increasing timestamps.
std::vector<KpiPoint> ewma_filter(std::span<const KpiPoint> series, FilterConfig config);

/// Everything frozen at training time for the SOM detector.
struct NominalBaseline {
    double dm_delta = 0.0;
    double kpi_mean = 0.0;
    double kpi_std = 0.0;  // population standard deviation of the filtered KPI
    double lcl = 0.0;      // kpi_mean - 3 kpi_std
    RowVector contribution_baseline;
    std::vector<NormStat> norm_stats;
    FilterConfig filter;
    std::size_t warmup_discarded = 0;
};

/// DM_delta, filtered KPI statistics after discarding the first `window`
/// samples (all samples are used when the training set is not longer than
/// the window), LCL and the contribution profile.
NominalBaseline compute_baseline(const SomModel& model, const Matrix& train,
                                 const FilterConfig& filter,
                                 std::vector<NormStat> norm_stats = {});

struct MonitorSettings {
    PersistenceConfig persistence;
    double contribution_threshold = kDefaultContributionThreshold;
    double max_missing_fraction = 0.2;
    bool contributions_always = false;
    /// Leading samples of a stream reported as no-data while the filter
    /// window fills; defaults to the filter window.
    std::optional<std::size_t> warmup;
};

/// Stateful SOM-KPI chart for one stream (single writer).
class KpiMonitor {
public:
    struct Step {
        KpiPoint point;
        PersistenceMachine::Transition transition = PersistenceMachine::Transition::None;
        std::optional<std::size_t> active_event;  // id of the event open after this step
        std::optional<ContributionRatios> ratios;
        bool neutral = false;
    };

    KpiMonitor(const SomModel& model, const NominalBaseline& baseline, MonitorSettings settings = {});

    /// `pattern` is normalised over the active variables; NaN marks missing.
    Step step(Timestamp timestamp, const Eigen::Ref<const RowVector>& pattern);

    const std::vector<WarningEvent>& events() const noexcept { return events_; }
    std::size_t samples() const noexcept { return index_; }

private:
    // Diagnostics gathered over the current out-of-control run and, once
    // the event opens, over the whole event.
    struct Tracker {
        std::vector<double> peak;
        bool started = false;
        double extreme = 0.0;
        Timestamp extreme_time = 0;
        std::size_t extreme_index = 0;
        ContributionRatios at_extreme;
        bool neutral = false;
    };

    void track(const KpiPoint& point, const ContributionRatios& ratios, bool neutral);
    void publish(WarningEvent& event) const;

    const SomModel& model_;
    const NominalBaseline& baseline_;
    MonitorSettings settings_;
    EwmaFilter filter_;
    PersistenceMachine machine_;
    std::vector<WarningEvent> events_;
    Tracker tracker_;
    std::size_t index_ = 0;
    std::optional<Timestamp> last_time_;
};

}  // namespace somcm
