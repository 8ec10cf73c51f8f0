#include "somcm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "somcm/error.hpp"
#include "somcm/timeutil.hpp"

namespace somcm {

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::InvalidInput, "cannot open '" + path + "'");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::InvalidInput, "cannot write '" + path + "'");
    return out;
}

bool next_record(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            return true;
        }
    }
    return false;
}

std::string trimmed(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(const std::string& text) {
    const std::string t = trimmed(text);
    if (t.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    const char* first = t.data();
    if (*first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
    require(ec == std::errc() && ptr == t.data() + t.size(), ErrorKind::InvalidInput,
            "not a number: '" + t + "'");
    return v;
}

Timestamp parse_time_field(const std::string& text, const std::string& where) {
    const auto t = parse_iso8601(text);
    require(t.has_value(), ErrorKind::InvalidInput,
            where + ": bad ISO-8601 timestamp '" + text + "'");
    return *t;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                field += '"';
                ++k;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    require(!quoted, ErrorKind::InvalidInput, "unterminated quoted field");
    out.push_back(std::move(field));
    return out;
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n\r") == std::string::npos) {
        return text;
    }
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::string format_number(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

ObservationFrame read_frame_csv(std::istream& in, const std::string& source) {
    std::string line;
    require(next_record(in, line), ErrorKind::InvalidInput, source + ": missing header row");
    const std::vector<std::string> header = split_csv_line(line);
    require(header.size() >= 2, ErrorKind::InvalidInput,
            source + ": header needs a timestamp column and at least one variable");
    std::vector<VariableInfo> vars;
    for (std::size_t j = 1; j < header.size(); ++j) {
        const std::string id = trimmed(header[j]);
        require(!id.empty(), ErrorKind::InvalidInput,
                source + ": empty variable id in header column " + std::to_string(j + 1));
        for (const auto& v : vars) {
            require(v.id != id, ErrorKind::InvalidInput, source + ": duplicate variable '" + id + "'");
        }
        vars.push_back({id, id, "", std::nullopt, std::nullopt});
    }

    std::vector<Timestamp> times;
    std::vector<double> cells;
    std::size_t row = 0;
    while (next_record(in, line)) {
        ++row;
        const std::string where = source + ": data row " + std::to_string(row);
        const std::vector<std::string> fields = split_csv_line(line);
        require(fields.size() == header.size(), ErrorKind::InvalidInput,
                where + ": expected " + std::to_string(header.size()) + " fields, got " +
                    std::to_string(fields.size()));
        const Timestamp t = parse_time_field(fields[0], where);
        require(times.empty() || t > times.back(), ErrorKind::InvalidInput,
                where + ": timestamp " + format_iso8601(t) + " does not increase");
        times.push_back(t);
        for (std::size_t j = 1; j < fields.size(); ++j) {
            try {
                const auto v = parse_number(fields[j]);
                const bool usable = v && std::isfinite(*v);
                cells.push_back(usable ? *v : kNaN);
            } catch (const Error& e) {
                fail(ErrorKind::InvalidInput, where + ", column '" + vars[j - 1].id + "': " + e.what());
            }
        }
    }

    const auto n = static_cast<Eigen::Index>(vars.size());
    Matrix values(static_cast<Eigen::Index>(times.size()), n);
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index j = 0; j < n; ++j) {
            values(r, j) = cells[static_cast<std::size_t>(r * n + j)];
        }
    }
    return ObservationFrame(std::move(times), std::move(vars), std::move(values));
}

ObservationFrame read_frame_csv_file(const std::string& path) {
    std::ifstream in = open_input(path);
    return read_frame_csv(in, path);
}

void write_frame_csv(std::ostream& out, const ObservationFrame& frame) {
    out << "timestamp";
    for (const auto& v : frame.variables()) {
        out << ',' << csv_field(v.id);
    }
    out << '\n';
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        out << format_iso8601(frame.timestamps()[r]);
        for (std::size_t j = 0; j < frame.cols(); ++j) {
            out << ',';
            if (frame.valid(r, j)) {
                out << format_number(frame.values()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)));
            }
        }
        out << '\n';
    }
}

void write_frame_csv_file(const std::string& path, const ObservationFrame& frame) {
    std::ofstream out = open_output(path);
    write_frame_csv(out, frame);
}

void write_flags_csv_file(const std::string& path, const ObservationFrame& frame) {
    std::ofstream out = open_output(path);
    out << "timestamp";
    for (const auto& v : frame.variables()) {
        out << ',' << csv_field(v.id);
    }
    out << '\n';
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        out << format_iso8601(frame.timestamps()[r]);
        for (std::size_t j = 0; j < frame.cols(); ++j) {
            out << ',' << to_string(frame.flag(r, j));
        }
        out << '\n';
    }
}

FaultWindowLog read_fault_log_csv_file(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    FaultWindowLog log;
    if (!next_record(in, line)) {
        return log;
    }
    std::vector<std::string> header = split_csv_line(line);
    require(header.size() >= 2 && trimmed(header[0]) == "start" && trimmed(header[1]) == "end",
            ErrorKind::InvalidInput, path + ": fault log header must be 'start,end,note'");
    std::size_t row = 0;
    while (next_record(in, line)) {
        ++row;
        const std::string where = path + ": row " + std::to_string(row);
        const std::vector<std::string> f = split_csv_line(line);
        require(f.size() >= 2 && f.size() <= 3, ErrorKind::InvalidInput,
                where + ": expected start,end[,note]");
        FaultWindow w;
        w.start = parse_time_field(f[0], where);
        w.end = parse_time_field(f[1], where);
        if (f.size() == 3) {
            w.note = f[2];
        }
        log.add(std::move(w));
    }
    return log;
}

void write_fault_log_csv_file(const std::string& path, const std::vector<FaultWindow>& windows) {
    std::ofstream out = open_output(path);
    out << "start,end,note\n";
    for (const auto& w : windows) {
        out << format_iso8601(w.start) << ',' << format_iso8601(w.end) << ',' << csv_field(w.note) << '\n';
    }
}

void write_labels_csv_file(const std::string& path, const SyntheticData& data) {
    std::ofstream out = open_output(path);
    out << "timestamp";
    for (const auto& v : data.frame.variables()) {
        out << ',' << csv_field(v.id);
    }
    out << '\n';
    for (std::size_t r = 0; r < data.frame.rows(); ++r) {
        out << format_iso8601(data.frame.timestamps()[r]);
        for (std::uint16_t label : data.labels[r]) {
            out << ',' << label;
        }
        out << '\n';
    }
}

void write_kpi_csv_file(const std::string& path, const std::vector<KpiRow>& rows) {
    std::ofstream out = open_output(path);
    out << "timestamp,raw_kpi,filtered_kpi,status,active_warning_id\n";
    auto num = [](double v) { return std::isfinite(v) ? format_number(v) : std::string(); };
    for (const auto& r : rows) {
        out << format_iso8601(r.point.timestamp) << ',' << num(r.point.raw) << ','
            << num(r.point.filtered) << ',' << to_string(r.point.status) << ',';
        if (r.warning_id) {
            out << *r.warning_id;
        }
        out << '\n';
    }
}

void write_t2_csv_file(const std::string& path, const std::vector<T2Point>& rows) {
    std::ofstream out = open_output(path);
    out << "timestamp,t2,status\n";
    for (const auto& r : rows) {
        out << format_iso8601(r.timestamp) << ',' << (std::isfinite(r.t2) ? format_number(r.t2) : "")
            << ',' << to_string(r.status) << '\n';
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out = open_output(path);
    out << text;
}

}  // namespace somcm
