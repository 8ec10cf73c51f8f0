#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "somcm/types.hpp"

namespace somcm {

enum class CellFlag : std::uint8_t {
    Valid = 0,
    Missing,
    Frozen,
    OutOfLimit,
    Spike,
    Outlier,
    ExcludedFaultWindow,
};

inline constexpr std::size_t kCellFlagCount = 7;

const char* to_string(CellFlag flag) noexcept;

struct VariableInfo {
    std::string id;
    std::string name;
    std::string unit;
    std::optional<double> min_limit;
    std::optional<double> max_limit;
};

/// Timestamped N x n observations with one quality flag per cell.
/// Missing cells hold NaN and are flagged Missing.
class ObservationFrame {
public:
    ObservationFrame() = default;
    ObservationFrame(std::vector<Timestamp> timestamps, std::vector<VariableInfo> variables,
                     Matrix values);

    std::size_t rows() const noexcept { return timestamps_.size(); }
    std::size_t cols() const noexcept { return variables_.size(); }

    const std::vector<Timestamp>& timestamps() const noexcept { return timestamps_; }
    const std::vector<VariableInfo>& variables() const noexcept { return variables_; }
    std::vector<VariableInfo>& variables() noexcept { return variables_; }
    const Matrix& values() const noexcept { return values_; }

    CellFlag flag(std::size_t r, std::size_t j) const noexcept { return flags_[r * cols() + j]; }
    void set_flag(std::size_t r, std::size_t j, CellFlag f) noexcept { flags_[r * cols() + j] = f; }
    bool valid(std::size_t r, std::size_t j) const noexcept { return flag(r, j) == CellFlag::Valid; }

    std::optional<std::size_t> find_variable(const std::string& id) const;

    /// Rows [begin, end) as a new frame, flags included.
    ObservationFrame slice(std::size_t begin, std::size_t end) const;

    /// Appends rows of `other` (same variable ids, later timestamps).
    void append(const ObservationFrame& other);

private:
    std::vector<Timestamp> timestamps_;
    std::vector<VariableInfo> variables_;
    Matrix values_;
    std::vector<CellFlag> flags_;
};

/// Throws InvalidInput naming the first row whose timestamp does not increase.
void require_increasing(const std::vector<Timestamp>& timestamps);

struct Limits {
    std::optional<double> min;
    std::optional<double> max;
};

struct CleaningConfig {
    std::size_t frozen_run = 60;       // F: identical consecutive samples
    double spike_factor = 8.0;         // s: |delta| > s * rolling std(delta)
    std::size_t spike_window = 60;     // deltas in the rolling window
    std::size_t spike_min_history = 10;
    double outlier_iqr = 5.0;          // q: |x - median| > q * IQR
    double regular_fraction = 0.8;     // variables below are reported for exclusion
    std::map<std::string, Limits> limits;  // by variable id; overrides frame limits
};

struct VariableCleaning {
    std::string id;
    std::array<std::size_t, kCellFlagCount> counts{};
    double regular_fraction = 0.0;
};

struct CleaningReport {
    std::size_t rows = 0;
    std::vector<VariableCleaning> variables;
    std::vector<std::string> below_threshold;
    double threshold = 0.0;
};

struct CleanResult {
    ObservationFrame frame;
    CleaningReport report;
};

/// Flags missing, out-of-limit, frozen, spike and outlier cells. Rules read
/// only cell values, and a flag is written only on a currently valid cell,
/// so cleaning a cleaned frame is the identity.
CleanResult clean(const ObservationFrame& raw, const CleaningConfig& config);

CleaningReport summarize(const ObservationFrame& frame, double regular_fraction);

struct FaultWindow {
    Timestamp start = 0;
    Timestamp end = 0;  // inclusive
    std::string note;
};

/// Operator-confirmed anomalous intervals.
class FaultWindowLog {
public:
    FaultWindowLog() = default;
    explicit FaultWindowLog(std::vector<FaultWindow> windows);

    void add(FaultWindow window);
    const std::vector<FaultWindow>& windows() const noexcept { return windows_; }
    bool empty() const noexcept { return windows_.empty(); }

    /// Sorted, with overlapping intervals merged (notes joined by "; ").
    std::vector<FaultWindow> merged() const;

private:
    std::vector<FaultWindow> windows_;
};

struct ExclusionResult {
    ObservationFrame frame;
    std::vector<FaultWindow> merged;
    std::size_t rows_excluded = 0;
};

/// Flags every cell of every row inside a window as ExcludedFaultWindow.
ExclusionResult exclude_fault_windows(const ObservationFrame& frame, const FaultWindowLog& log);

enum class NormalizationMethod { ZScore, MinMax };

const char* to_string(NormalizationMethod method) noexcept;
NormalizationMethod parse_normalization(const std::string& text);

/// Per-variable affine scaling: z = (x - offset) / scale. For z-scores the
/// offset is the mean and the scale the sample standard deviation (N - 1).
struct NormStat {
    std::string id;
    bool active = false;
    double offset = 0.0;
    double scale = 1.0;
};

struct NormalizedData {
    Matrix data;                          // surviving rows x active variables
    std::vector<Timestamp> timestamps;
    std::vector<std::size_t> source_rows;
    std::vector<NormStat> stats;          // one per frame variable
    std::vector<std::size_t> active;      // frame indices of active variables
    std::size_t rows_dropped = 0;
};

NormalizedData normalize(const ObservationFrame& frame,
                         NormalizationMethod method = NormalizationMethod::ZScore);

std::vector<std::size_t> active_indices(const std::vector<NormStat>& stats);

/// Scales one raw row (all frame variables, NaN = missing) onto the active
/// variables. Missing active cells stay NaN.
RowVector normalize_row(const std::vector<NormStat>& stats, const Eigen::Ref<const RowVector>& raw);

/// Inverse of the scaling for a matrix over the active variables.
Matrix denormalize(const std::vector<NormStat>& stats, const Matrix& normalized);

}  // namespace somcm
