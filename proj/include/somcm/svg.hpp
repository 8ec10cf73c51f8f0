#pragma once

#include <string>

#include "somcm/pipeline.hpp"

namespace somcm {

/// Two stacked panels: filtered KPI with the LCL, and t^2 with the UCL.
/// Open warning intervals are shaded. Long series are decimated to a
/// min/max envelope per pixel column.
std::string render_monitor_svg(const MonitorOutput& out, double lcl, double ucl);

}  // namespace somcm
