#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "somcm/hotelling.hpp"
#include "somcm/kpi.hpp"
#include "somcm/preprocess.hpp"
#include "somcm/synthetic.hpp"

namespace somcm {

/// Splits one CSV record. Double-quoted fields may contain commas and "".
std::vector<std::string> split_csv_line(const std::string& line);

/// Quotes a field when it holds a comma, quote or newline.
std::string csv_field(const std::string& text);

/// Header "timestamp,<id>,...": ISO-8601 UTC first column, empty cell =
/// missing. Throws InvalidInput with the offending data row (1-based) for
/// unparseable cells or non-increasing timestamps.
ObservationFrame read_frame_csv(std::istream& in, const std::string& source = "input");
ObservationFrame read_frame_csv_file(const std::string& path);

/// Valid cells only; other cells are written empty.
void write_frame_csv(std::ostream& out, const ObservationFrame& frame);
void write_frame_csv_file(const std::string& path, const ObservationFrame& frame);

/// Same layout with flag names in place of values.
void write_flags_csv_file(const std::string& path, const ObservationFrame& frame);

/// "start,end,note" with ISO-8601 bounds (inclusive).
FaultWindowLog read_fault_log_csv_file(const std::string& path);
void write_fault_log_csv_file(const std::string& path, const std::vector<FaultWindow>& windows);

/// Per-cell fault ids (0 = nominal), aligned with the frame rows.
void write_labels_csv_file(const std::string& path, const SyntheticData& data);

struct KpiRow {
    KpiPoint point;
    std::optional<std::size_t> warning_id;
};

void write_kpi_csv_file(const std::string& path, const std::vector<KpiRow>& rows);
void write_t2_csv_file(const std::string& path, const std::vector<T2Point>& rows);

/// Shortest text that parses back to the same double.
std::string format_number(double value);

/// Whole file as a string; throws InvalidInput when unreadable.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace somcm
