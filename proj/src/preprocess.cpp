#include "somcm/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "somcm/error.hpp"

namespace somcm {

const char* to_string(CellFlag flag) noexcept {
    switch (flag) {
        case CellFlag::Valid: return "valid";
        case CellFlag::Missing: return "missing";
        case CellFlag::Frozen: return "frozen";
        case CellFlag::OutOfLimit: return "out-of-limit";
        case CellFlag::Spike: return "spike";
        case CellFlag::Outlier: return "outlier";
        case CellFlag::ExcludedFaultWindow: return "excluded-fault-window";
    }
    return "unknown";
}

const char* to_string(NormalizationMethod method) noexcept {
    return method == NormalizationMethod::ZScore ? "zscore" : "minmax";
}

NormalizationMethod parse_normalization(const std::string& text) {
    if (text == "zscore") {
        return NormalizationMethod::ZScore;
    }
    if (text == "minmax") {
        return NormalizationMethod::MinMax;
    }
    fail(ErrorKind::ConfigError, "unknown normalization method '" + text + "'");
}

void require_increasing(const std::vector<Timestamp>& timestamps) {
    for (std::size_t r = 1; r < timestamps.size(); ++r) {
        if (timestamps[r] <= timestamps[r - 1]) {
            fail(ErrorKind::InvalidInput,
                 "timestamps not strictly increasing at data row " + std::to_string(r + 1));
        }
    }
}

ObservationFrame::ObservationFrame(std::vector<Timestamp> timestamps,
                                   std::vector<VariableInfo> variables, Matrix values)
    : timestamps_(std::move(timestamps)), variables_(std::move(variables)), values_(std::move(values)) {
    require(static_cast<std::size_t>(values_.rows()) == timestamps_.size() &&
                static_cast<std::size_t>(values_.cols()) == variables_.size(),
            ErrorKind::ContractViolation, "frame shape does not match timestamps/variables");
    require_increasing(timestamps_);
    flags_.assign(rows() * cols(), CellFlag::Valid);
    for (std::size_t r = 0; r < rows(); ++r) {
        for (std::size_t j = 0; j < cols(); ++j) {
            if (!std::isfinite(values_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)))) {
                values_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = kNaN;
                set_flag(r, j, CellFlag::Missing);
            }
        }
    }
}

std::optional<std::size_t> ObservationFrame::find_variable(const std::string& id) const {
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        if (variables_[j].id == id) {
            return j;
        }
    }
    return std::nullopt;
}

ObservationFrame ObservationFrame::slice(std::size_t begin, std::size_t end) const {
    require(begin <= end && end <= rows(), ErrorKind::ContractViolation, "slice out of range");
    ObservationFrame out;
    out.timestamps_.assign(timestamps_.begin() + static_cast<std::ptrdiff_t>(begin),
                           timestamps_.begin() + static_cast<std::ptrdiff_t>(end));
    out.variables_ = variables_;
    out.values_ = values_.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
    out.flags_.assign(flags_.begin() + static_cast<std::ptrdiff_t>(begin * cols()),
                      flags_.begin() + static_cast<std::ptrdiff_t>(end * cols()));
    return out;
}

void ObservationFrame::append(const ObservationFrame& other) {
    if (other.rows() == 0) {
        return;
    }
    if (rows() == 0 && cols() == 0) {
        *this = other;
        return;
    }
    require(other.cols() == cols(), ErrorKind::InvalidInput, "appended frame has a different width");
    for (std::size_t j = 0; j < cols(); ++j) {
        require(other.variables_[j].id == variables_[j].id, ErrorKind::InvalidInput,
                "appended frame variable '" + other.variables_[j].id + "' does not match '" +
                    variables_[j].id + "'");
    }
    require(rows() == 0 || other.timestamps_.front() > timestamps_.back(), ErrorKind::InvalidInput,
            "appended frame must start after the last timestamp");
    const auto old_rows = values_.rows();
    Matrix merged(old_rows + other.values_.rows(), values_.cols());
    merged.topRows(old_rows) = values_;
    merged.bottomRows(other.values_.rows()) = other.values_;
    values_ = std::move(merged);
    timestamps_.insert(timestamps_.end(), other.timestamps_.begin(), other.timestamps_.end());
    flags_.insert(flags_.end(), other.flags_.begin(), other.flags_.end());
}

namespace {

void mark(ObservationFrame& frame, std::size_t r, std::size_t j, CellFlag flag) {
    if (frame.valid(r, j)) {
        frame.set_flag(r, j, flag);
    }
}

// Linear-interpolation quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void flag_variable(ObservationFrame& frame, std::size_t j, const Limits& limits,
                   const CleaningConfig& config) {
    const Matrix& v = frame.values();
    const auto col = static_cast<Eigen::Index>(j);
    const std::size_t rows = frame.rows();
    auto value = [&](std::size_t r) { return v(static_cast<Eigen::Index>(r), col); };
    auto present = [&](std::size_t r) { return !std::isnan(value(r)); };

    // Physical / operative limits.
    for (std::size_t r = 0; r < rows; ++r) {
        if (!present(r)) {
            continue;
        }
        if ((limits.min && value(r) < *limits.min) || (limits.max && value(r) > *limits.max)) {
            mark(frame, r, j, CellFlag::OutOfLimit);
        }
    }

    // Frozen: the last F present samples are identical.
    if (config.frozen_run >= 1) {
        std::size_t run = 0;
        for (std::size_t r = 0; r < rows; ++r) {
            if (!present(r)) {
                run = 0;
                continue;
            }
            run = (run > 0 && value(r) == value(r - 1)) ? run + 1 : 1;
            if (run >= config.frozen_run) {
                mark(frame, r, j, CellFlag::Frozen);
            }
        }
    }

    // Spike: |delta| against the standard deviation of the preceding deltas.
    if (config.spike_window >= 2) {
        std::vector<double> history;
        history.reserve(config.spike_window);
        std::size_t next = 0;
        std::optional<double> previous;
        for (std::size_t r = 0; r < rows; ++r) {
            if (!present(r)) {
                continue;
            }
            if (previous) {
                const double delta = value(r) - *previous;
                if (history.size() >= std::min(config.spike_min_history, config.spike_window)) {
                    double mean = 0.0;
                    for (double h : history) {
                        mean += h;
                    }
                    mean /= static_cast<double>(history.size());
                    double var = 0.0;
                    for (double h : history) {
                        var += (h - mean) * (h - mean);
                    }
                    const double sd = std::sqrt(var / static_cast<double>(history.size() - 1));
                    if (sd > 0.0 && std::abs(delta) > config.spike_factor * sd) {
                        mark(frame, r, j, CellFlag::Spike);
                    }
                }
                if (history.size() < config.spike_window) {
                    history.push_back(delta);
                } else {
                    history[next] = delta;
                    next = (next + 1) % config.spike_window;
                }
            }
            previous = value(r);
        }
    }

    // Statistical outliers around the median.
    std::vector<double> sorted;
    sorted.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        if (present(r)) {
            sorted.push_back(value(r));
        }
    }
    if (sorted.size() >= 4) {
        std::sort(sorted.begin(), sorted.end());
        const double median = quantile(sorted, 0.5);
        const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
        if (iqr > 0.0) {
            for (std::size_t r = 0; r < rows; ++r) {
                if (present(r) && std::abs(value(r) - median) > config.outlier_iqr * iqr) {
                    mark(frame, r, j, CellFlag::Outlier);
                }
            }
        }
    }
}

}  // namespace

CleaningReport summarize(const ObservationFrame& frame, double regular_fraction) {
    CleaningReport report;
    report.rows = frame.rows();
    report.threshold = regular_fraction;
    for (std::size_t j = 0; j < frame.cols(); ++j) {
        VariableCleaning vc;
        vc.id = frame.variables()[j].id;
        for (std::size_t r = 0; r < frame.rows(); ++r) {
            ++vc.counts[static_cast<std::size_t>(frame.flag(r, j))];
        }
        vc.regular_fraction = frame.rows() == 0
                                  ? 0.0
                                  : static_cast<double>(vc.counts[0]) / static_cast<double>(frame.rows());
        if (vc.regular_fraction < regular_fraction) {
            report.below_threshold.push_back(vc.id);
        }
        report.variables.push_back(std::move(vc));
    }
    return report;
}

CleanResult clean(const ObservationFrame& raw, const CleaningConfig& config) {
    require_increasing(raw.timestamps());
    for (const auto& [id, unused] : config.limits) {
        require(raw.find_variable(id).has_value(), ErrorKind::ConfigError,
                "limits configured for unknown variable '" + id + "'");
    }
    CleanResult out{raw, {}};
    for (std::size_t j = 0; j < out.frame.cols(); ++j) {
        VariableInfo& info = out.frame.variables()[j];
        if (auto it = config.limits.find(info.id); it != config.limits.end()) {
            if (it->second.min) {
                info.min_limit = it->second.min;
            }
            if (it->second.max) {
                info.max_limit = it->second.max;
            }
        }
        flag_variable(out.frame, j, Limits{info.min_limit, info.max_limit}, config);
    }
    out.report = summarize(out.frame, config.regular_fraction);
    return out;
}

FaultWindowLog::FaultWindowLog(std::vector<FaultWindow> windows) {
    for (auto& w : windows) {
        add(std::move(w));
    }
}

void FaultWindowLog::add(FaultWindow window) {
    require(window.start <= window.end, ErrorKind::InvalidInput,
            "fault window ends before it starts");
    windows_.push_back(std::move(window));
}

std::vector<FaultWindow> FaultWindowLog::merged() const {
    std::vector<FaultWindow> sorted = windows_;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const FaultWindow& a, const FaultWindow& b) { return a.start < b.start; });
    std::vector<FaultWindow> out;
    for (auto& w : sorted) {
        if (!out.empty() && w.start <= out.back().end) {
            out.back().end = std::max(out.back().end, w.end);
            if (!w.note.empty()) {
                out.back().note += out.back().note.empty() ? w.note : "; " + w.note;
            }
        } else {
            out.push_back(std::move(w));
        }
    }
    return out;
}

ExclusionResult exclude_fault_windows(const ObservationFrame& frame, const FaultWindowLog& log) {
    ExclusionResult out{frame, log.merged(), 0};
    if (out.merged.empty()) {
        return out;
    }
    const auto& ts = frame.timestamps();
    for (const auto& w : out.merged) {
        auto first = std::lower_bound(ts.begin(), ts.end(), w.start);
        auto last = std::upper_bound(ts.begin(), ts.end(), w.end);
        for (auto it = first; it != last; ++it) {
            const auto r = static_cast<std::size_t>(it - ts.begin());
            for (std::size_t j = 0; j < frame.cols(); ++j) {
                out.frame.set_flag(r, j, CellFlag::ExcludedFaultWindow);
            }
            ++out.rows_excluded;
        }
    }
    return out;
}

std::vector<std::size_t> active_indices(const std::vector<NormStat>& stats) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < stats.size(); ++j) {
        if (stats[j].active) {
            out.push_back(j);
        }
    }
    return out;
}

NormalizedData normalize(const ObservationFrame& frame, NormalizationMethod method) {
    NormalizedData out;
    const Matrix& v = frame.values();
    out.stats.resize(frame.cols());
    for (std::size_t j = 0; j < frame.cols(); ++j) {
        NormStat& st = out.stats[j];
        st.id = frame.variables()[j].id;
        double sum = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        std::size_t count = 0;
        for (std::size_t r = 0; r < frame.rows(); ++r) {
            if (frame.valid(r, j)) {
                const double x = v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
                sum += x;
                lo = std::min(lo, x);
                hi = std::max(hi, x);
                ++count;
            }
        }
        if (count < 2) {
            continue;
        }
        const double mean = sum / static_cast<double>(count);
        double var = 0.0;
        for (std::size_t r = 0; r < frame.rows(); ++r) {
            if (frame.valid(r, j)) {
                const double d = v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) - mean;
                var += d * d;
            }
        }
        const double sd = std::sqrt(var / static_cast<double>(count - 1));
        if (method == NormalizationMethod::ZScore) {
            st.offset = mean;
            st.scale = sd;
        } else {
            st.offset = lo;
            st.scale = hi - lo;
        }
        st.active = st.scale > 0.0 && std::isfinite(st.scale);
        if (!st.active) {
            st.offset = 0.0;
            st.scale = 1.0;
        }
    }
    out.active = active_indices(out.stats);
    require(!out.active.empty(), ErrorKind::EmptyTrainingSet,
            "no variable has enough valid, non-constant samples");

    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        bool ok = true;
        for (std::size_t j : out.active) {
            ok = ok && frame.valid(r, j);
        }
        if (ok) {
            keep.push_back(r);
        }
    }
    out.rows_dropped = frame.rows() - keep.size();
    require(!keep.empty(), ErrorKind::EmptyTrainingSet, "no rows survive cleaning");

    out.data.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(out.active.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        for (std::size_t a = 0; a < out.active.size(); ++a) {
            const NormStat& st = out.stats[out.active[a]];
            out.data(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(a)) =
                (v(static_cast<Eigen::Index>(keep[k]), static_cast<Eigen::Index>(out.active[a])) - st.offset) /
                st.scale;
        }
        out.timestamps.push_back(frame.timestamps()[keep[k]]);
    }
    out.source_rows = std::move(keep);
    return out;
}

RowVector normalize_row(const std::vector<NormStat>& stats, const Eigen::Ref<const RowVector>& raw) {
    require(static_cast<std::size_t>(raw.size()) == stats.size(), ErrorKind::ContractViolation,
            "row width does not match normalisation statistics");
    const auto active = active_indices(stats);
    RowVector out(static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) {
        const NormStat& st = stats[active[a]];
        const double x = raw(static_cast<Eigen::Index>(active[a]));
        out(static_cast<Eigen::Index>(a)) = std::isfinite(x) ? (x - st.offset) / st.scale : kNaN;
    }
    return out;
}

Matrix denormalize(const std::vector<NormStat>& stats, const Matrix& normalized) {
    const auto active = active_indices(stats);
    require(static_cast<std::size_t>(normalized.cols()) == active.size(), ErrorKind::ContractViolation,
            "matrix width does not match the active variables");
    Matrix out(normalized.rows(), normalized.cols());
    for (std::size_t a = 0; a < active.size(); ++a) {
        const NormStat& st = stats[active[a]];
        out.col(static_cast<Eigen::Index>(a)) =
            normalized.col(static_cast<Eigen::Index>(a)).array() * st.scale + st.offset;
    }
    return out;
}

}  // namespace somcm
