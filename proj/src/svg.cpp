#include "somcm/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>

#include "somcm/timeutil.hpp"

namespace somcm {

namespace {

constexpr double kWidth = 1000.0;
constexpr double kPanelHeight = 220.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 30.0;
constexpr double kGap = 50.0;
constexpr std::size_t kColumns = 900;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct Panel {
    double top;
    double lo;
    double hi;

    double y(double v) const {
        const double span = hi > lo ? hi - lo : 1.0;
        const double t = std::clamp((v - lo) / span, 0.0, 1.0);
        return top + kPanelHeight * (1.0 - t);
    }
};

// Min/max envelope of a series over pixel columns, as an SVG path.
std::string envelope_path(std::size_t n, const std::function<double(std::size_t)>& value,
                          const Panel& panel) {
    std::ostringstream path;
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const std::size_t columns = std::min(n, kColumns);
    bool pen = false;
    for (std::size_t c = 0; c < columns; ++c) {
        const std::size_t begin = c * n / columns;
        const std::size_t end = std::max(begin + 1, (c + 1) * n / columns);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t k = begin; k < end; ++k) {
            const double v = value(k);
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (!std::isfinite(lo)) {
            pen = false;
            continue;
        }
        const double x = kMarginLeft + plot_w * (static_cast<double>(c) + 0.5) / static_cast<double>(columns);
        path << (pen ? 'L' : 'M') << fmt(x) << ',' << fmt(panel.y(hi));
        if (hi != lo) {
            path << 'L' << fmt(x) << ',' << fmt(panel.y(lo));
        }
        pen = true;
    }
    return path.str();
}

void frame_panel(std::ostringstream& o, const Panel& p, const std::string& title, double limit,
                 const std::string& limit_name) {
    const double right = kWidth - kMarginRight;
    o << "<rect x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(p.top) << "\" width=\""
      << fmt(right - kMarginLeft) << "\" height=\"" << fmt(kPanelHeight)
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
    o << "<text x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(p.top - 8) << "\" font-size=\"13\">" << title
      << "</text>\n";
    for (double v : {p.lo, p.hi}) {
        o << "<text x=\"" << fmt(kMarginLeft - 6) << "\" y=\"" << fmt(p.y(v) + 4)
          << "\" font-size=\"11\" text-anchor=\"end\">" << label(v) << "</text>\n";
    }
    o << "<line x1=\"" << fmt(kMarginLeft) << "\" x2=\"" << fmt(right) << "\" y1=\"" << fmt(p.y(limit))
      << "\" y2=\"" << fmt(p.y(limit)) << "\" stroke=\"#c0392b\" stroke-dasharray=\"6,4\"/>\n";
    o << "<text x=\"" << fmt(right - 4) << "\" y=\"" << fmt(p.y(limit) - 4)
      << "\" font-size=\"11\" text-anchor=\"end\" fill=\"#c0392b\">" << limit_name << ' ' << label(limit)
      << "</text>\n";
}

void shade_events(std::ostringstream& o, const std::vector<WarningEvent>& events, std::size_t n,
                  const Panel& p) {
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    for (const auto& e : events) {
        const double x0 = kMarginLeft + plot_w * static_cast<double>(e.start_index) / static_cast<double>(n);
        const std::size_t last = e.end_index.value_or(n - 1);
        const double x1 = kMarginLeft + plot_w * static_cast<double>(last + 1) / static_cast<double>(n);
        o << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(p.top) << "\" width=\"" << fmt(std::max(x1 - x0, 1.0))
          << "\" height=\"" << fmt(kPanelHeight) << "\" fill=\"#f5b041\" fill-opacity=\"0.3\"/>\n";
    }
}

std::pair<double, double> range_of(std::size_t n, const std::function<double(std::size_t)>& value,
                                   double limit) {
    double lo = limit;
    double hi = limit;
    for (std::size_t k = 0; k < n; ++k) {
        const double v = value(k);
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double pad = hi > lo ? 0.05 * (hi - lo) : 0.5;
    return {lo - pad, hi + pad};
}

}  // namespace

std::string render_monitor_svg(const MonitorOutput& out, double lcl, double ucl) {
    const std::size_t n = out.kpi.size();
    const double height = kMarginTop + 2 * kPanelHeight + kGap + 40.0;
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth) << "\" height=\"" << fmt(height)
      << "\" viewBox=\"0 0 " << fmt(kWidth) << ' ' << fmt(height) << "\" font-family=\"sans-serif\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (n == 0) {
        o << "<text x=\"20\" y=\"40\" font-size=\"14\">empty stream</text>\n</svg>\n";
        return o.str();
    }

    const auto kpi_value = [&](std::size_t k) { return out.kpi[k].point.filtered; };
    const auto t2_value = [&](std::size_t k) { return out.t2[k].t2; };

    const auto [klo, khi] = range_of(n, kpi_value, lcl);
    const Panel kpi_panel{kMarginTop, klo, khi};
    shade_events(o, out.som_events, n, kpi_panel);
    frame_panel(o, kpi_panel, "filtered KPI", lcl, "LCL");
    o << "<path d=\"" << envelope_path(n, kpi_value, kpi_panel)
      << "\" fill=\"none\" stroke=\"#1f618d\" stroke-width=\"1\"/>\n";

    // t^2 is heavy tailed; the axis stops at 4 UCL.
    auto [tlo, thi] = range_of(n, t2_value, ucl);
    thi = std::min(thi, 4.0 * ucl);
    const Panel t2_panel{kMarginTop + kPanelHeight + kGap, std::max(0.0, tlo), thi};
    shade_events(o, out.t2_events, n, t2_panel);
    frame_panel(o, t2_panel, "Hotelling t\xC2\xB2", ucl, "UCL");
    o << "<path d=\"" << envelope_path(n, t2_value, t2_panel)
      << "\" fill=\"none\" stroke=\"#117a65\" stroke-width=\"1\"/>\n";

    const double axis_y = t2_panel.top + kPanelHeight + 18;
    o << "<text x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(axis_y) << "\" font-size=\"11\">"
      << format_iso8601(out.kpi.front().point.timestamp) << "</text>\n";
    o << "<text x=\"" << fmt(kWidth - kMarginRight) << "\" y=\"" << fmt(axis_y)
      << "\" font-size=\"11\" text-anchor=\"end\">" << format_iso8601(out.kpi.back().point.timestamp)
      << "</text>\n";
    o << "</svg>\n";
    return o.str();
}

}  // namespace somcm
