#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Core>

namespace somcm {

/// Row-major dense matrix; one observation (pattern) per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Monitoring status shared by the KPI and T^2 charts.
enum class ChartStatus { InControl, OutOfControl, NoData };

const char* to_string(ChartStatus status) noexcept;

}  // namespace somcm
