#include "somcm/kpi.hpp"

#include <algorithm>
#include <cmath>

#include "somcm/error.hpp"

namespace somcm {

double kpi(double dm_delta, double dm_single) {
    require(dm_delta > 0.0 && std::isfinite(dm_delta), ErrorKind::InvalidBaseline,
            "DM_delta must be positive");
    return 1.0 / (1.0 + std::abs(1.0 - dm_single / dm_delta));
}

FilterConfig FilterConfig::for_window(std::size_t window) {
    require(window >= 1, ErrorKind::ContractViolation, "filter window must be >= 1");
    FilterConfig config;
    config.window = window;
    config.lambda = window == 1 ? 0.5 : std::pow(0.01, 1.0 / static_cast<double>(window - 1));
    return config;
}

FilterConfig FilterConfig::for_horizon(double horizon_seconds, double period_seconds) {
    require(horizon_seconds > 0.0 && period_seconds > 0.0, ErrorKind::ContractViolation,
            "filter horizon and sampling period must be positive");
    const auto samples = static_cast<std::size_t>(std::llround(horizon_seconds / period_seconds));
    return for_window(std::max<std::size_t>(samples, 1));
}

EwmaFilter::EwmaFilter(FilterConfig config) : config_(config) {
    require(config_.window >= 1, ErrorKind::ContractViolation, "filter window must be >= 1");
    require(config_.lambda > 0.0 && config_.lambda < 1.0, ErrorKind::ContractViolation,
            "filter decay must lie in (0, 1)");
    powers_.resize(config_.window);
    double p = 1.0;
    for (auto& v : powers_) {
        v = p;
        p *= config_.lambda;
    }
    ring_.assign(config_.window, kNaN);
}

std::optional<double> EwmaFilter::push(std::optional<double> raw) {
    ring_[head_] = raw.value_or(kNaN);
    ++seen_;
    const std::size_t w = config_.window;
    const std::size_t span = std::min(seen_, w);
    double numer = 0.0;
    double denom = 0.0;
    for (std::size_t k = 0; k < span; ++k) {
        const double v = ring_[(head_ + w - k) % w];
        if (!std::isnan(v)) {
            numer += powers_[k] * v;
            denom += powers_[k];
        }
    }
    head_ = (head_ + 1) % w;
    if (denom == 0.0) {
        return std::nullopt;
    }
    return numer / denom;
}

std::vector<KpiPoint> ewma_filter(std::span<const KpiPoint> series, FilterConfig config) {
    for (std::size_t t = 1; t < series.size(); ++t) {
        require(series[t].timestamp > series[t - 1].timestamp, ErrorKind::InvalidInput,
                "KPI series timestamps must be strictly increasing (index " + std::to_string(t) + ")");
    }
    EwmaFilter filter(config);
    std::vector<KpiPoint> out(series.begin(), series.end());
    for (auto& point : out) {
        const bool has_raw = point.status != ChartStatus::NoData && std::isfinite(point.raw);
        const auto filtered = filter.push(has_raw ? std::optional<double>(point.raw) : std::nullopt);
        point.filtered = filtered.value_or(kNaN);
        if (!filtered) {
            point.status = ChartStatus::NoData;
        } else if (point.status == ChartStatus::NoData && has_raw) {
            point.status = ChartStatus::InControl;
        }
    }
    return out;
}

NominalBaseline compute_baseline(const SomModel& model, const Matrix& train,
                                 const FilterConfig& filter, std::vector<NormStat> norm_stats) {
    require(train.rows() >= 1, ErrorKind::InvalidInput, "baseline needs training rows");
    NominalBaseline baseline;
    baseline.filter = filter;
    baseline.norm_stats = std::move(norm_stats);

    std::vector<double> dm(static_cast<std::size_t>(train.rows()));
    double total = 0.0;
    for (Eigen::Index r = 0; r < train.rows(); ++r) {
        dm[static_cast<std::size_t>(r)] = distortion_single(model, train.row(r));
        total += dm[static_cast<std::size_t>(r)];
    }
    baseline.dm_delta = total / static_cast<double>(train.rows());
    require(baseline.dm_delta > 0.0, ErrorKind::InvalidBaseline,
            "DM_delta is zero: the training data is reproduced exactly by the codebook");

    EwmaFilter ewma(filter);
    std::vector<double> filtered;
    filtered.reserve(dm.size());
    for (double value : dm) {
        filtered.push_back(*ewma.push(kpi(baseline.dm_delta, value)));
    }
    const std::size_t skip = filtered.size() > filter.window ? filter.window : 0;
    baseline.warmup_discarded = skip;
    const auto used = static_cast<double>(filtered.size() - skip);
    double mean = 0.0;
    for (std::size_t t = skip; t < filtered.size(); ++t) {
        mean += filtered[t];
    }
    mean /= used;
    double var = 0.0;
    for (std::size_t t = skip; t < filtered.size(); ++t) {
        var += (filtered[t] - mean) * (filtered[t] - mean);
    }
    baseline.kpi_mean = mean;
    baseline.kpi_std = std::sqrt(var / used);
    baseline.lcl = baseline.kpi_mean - 3.0 * baseline.kpi_std;
    baseline.contribution_baseline = baseline_contribution(model, train);
    return baseline;
}

KpiMonitor::KpiMonitor(const SomModel& model, const NominalBaseline& baseline,
                       MonitorSettings settings)
    : model_(model),
      baseline_(baseline),
      settings_(settings),
      filter_(baseline.filter),
      machine_(settings.persistence) {
    require(baseline_.dm_delta > 0.0, ErrorKind::InvalidBaseline, "DM_delta must be positive");
    require(static_cast<std::size_t>(baseline_.contribution_baseline.size()) == model_.dimension(),
            ErrorKind::ContractViolation, "baseline contribution does not match model dimension");
}

void KpiMonitor::track(const KpiPoint& point, const ContributionRatios& ratios, bool neutral) {
    Tracker& t = tracker_;
    if (!t.started) {
        t = Tracker{};
        t.started = true;
        t.peak.assign(static_cast<std::size_t>(ratios.ratios.size()), 0.0);
        t.extreme = point.filtered;
        t.extreme_time = point.timestamp;
        t.extreme_index = index_;
        t.at_extreme = ratios;
        t.neutral = neutral;
    } else if (point.filtered < t.extreme) {
        t.extreme = point.filtered;
        t.extreme_time = point.timestamp;
        t.extreme_index = index_;
        t.at_extreme = ratios;
        t.neutral = neutral;
    }
    if (!neutral) {
        for (std::size_t j = 0; j < t.peak.size(); ++j) {
            t.peak[j] = std::max(t.peak[j], ratios.ratios(static_cast<Eigen::Index>(j)));
        }
    }
}

void KpiMonitor::publish(WarningEvent& event) const {
    const Tracker& t = tracker_;
    if (!t.started) {
        return;
    }
    event.extreme_value = t.extreme;
    event.extreme_time = t.extreme_time;
    event.extreme_index = t.extreme_index;
    event.ratios_at_extreme.assign(t.at_extreme.ratios.data(),
                                   t.at_extreme.ratios.data() + t.at_extreme.ratios.size());
    event.flagged_at_extreme = t.at_extreme.flagged;
    event.neutral_at_extreme = t.neutral;
    event.implicated.clear();
    for (std::size_t j = 0; j < t.peak.size(); ++j) {
        if (t.peak[j] > settings_.contribution_threshold) {
            event.implicated.push_back({j, t.peak[j]});
        }
    }
    std::stable_sort(event.implicated.begin(), event.implicated.end(),
                     [](const ImplicatedVariable& a, const ImplicatedVariable& b) {
                         return a.peak_ratio > b.peak_ratio;
                     });
}

KpiMonitor::Step KpiMonitor::step(Timestamp timestamp, const Eigen::Ref<const RowVector>& pattern) {
    require(static_cast<std::size_t>(pattern.size()) == model_.dimension(),
            ErrorKind::ContractViolation, "pattern dimension does not match the model");
    require(!last_time_ || timestamp > *last_time_, ErrorKind::InvalidInput,
            "monitored timestamps must be strictly increasing");
    last_time_ = timestamp;
    Step out;
    out.point.timestamp = timestamp;

    const PresenceMask mask = PresenceMask::from_pattern(pattern);
    const auto n = static_cast<double>(mask.present.size());
    const double missing = (n - static_cast<double>(mask.present_count)) / n;
    const bool usable = mask.present_count > 0 && missing <= settings_.max_missing_fraction;

    std::optional<double> raw;
    if (usable) {
        raw = kpi(baseline_.dm_delta, distortion_single(model_, pattern, mask));
        out.point.raw = *raw;
    }
    const auto filtered = filter_.push(raw);
    out.point.filtered = filtered.value_or(kNaN);

    const std::size_t warmup = settings_.warmup.value_or(baseline_.filter.window);
    if (!usable || !filtered || index_ + 1 < warmup) {
        out.point.status = ChartStatus::NoData;
    } else {
        out.point.status =
            *filtered < baseline_.lcl ? ChartStatus::OutOfControl : ChartStatus::InControl;
    }

    const bool was_active = machine_.active();
    out.transition = machine_.update(out.point.status);

    if (out.point.status != ChartStatus::NoData) {
        const bool in_episode = machine_.active() || was_active ||
                                out.point.status == ChartStatus::OutOfControl;
        if (in_episode || settings_.contributions_always) {
            const ContributionVector cv = contribution(model_, pattern, mask);
            out.ratios = contribution_ratios(baseline_.contribution_baseline, cv.values,
                                             settings_.contribution_threshold);
            out.neutral = cv.neutral;
            if (in_episode) {
                track(out.point, *out.ratios, cv.neutral);
            }
        }
        if (!machine_.active() && !was_active && out.point.status == ChartStatus::InControl) {
            tracker_.started = false;
        }
    }

    if (out.transition == PersistenceMachine::Transition::Opened) {
        WarningEvent event;
        event.id = events_.size() + 1;
        event.detector = "som-kpi";
        event.start_time = timestamp;
        event.start_index = index_;
        events_.push_back(std::move(event));
    }
    if (!events_.empty() && (machine_.active() || out.transition == PersistenceMachine::Transition::Closed)) {
        WarningEvent& event = events_.back();
        publish(event);
        if (out.transition == PersistenceMachine::Transition::Closed) {
            event.end_time = timestamp;
            event.end_index = index_;
            tracker_.started = false;
        }
    }
    if (machine_.active()) {
        out.active_event = events_.back().id;
    }
    ++index_;
    return out;
}

}  // namespace somcm
