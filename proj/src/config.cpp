#include "somcm/config.hpp"

#include <charconv>
#include <filesystem>
#include <functional>
#include <sstream>

#include "somcm/error.hpp"
#include "somcm/io.hpp"

namespace somcm {

namespace {

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

[[noreturn]] void config_error(int line, const std::string& msg) {
    fail(ErrorKind::ConfigError, (line > 0 ? "config line " + std::to_string(line) + ": " : "config: ") + msg);
}

bool is_number(const std::string& s) {
    if (s.empty()) {
        return false;
    }
    double v = 0.0;
    const char* first = s.data() + (s[0] == '+' ? 1 : 0);
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool valid_key(const std::string& key) {
    if (key.empty()) {
        return false;
    }
    for (char c : key) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '_' || c == '-' || c == '.';
        if (!ok) {
            return false;
        }
    }
    return key.front() != '.' && key.back() != '.';
}

// Drops a trailing comment that is not inside quotes.
std::string without_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        if (line[k] == '"' && (k == 0 || line[k - 1] != '\\')) {
            quoted = !quoted;
        } else if (line[k] == '#' && !quoted) {
            return line.substr(0, k);
        }
    }
    return line;
}

ConfigValue parse_value(const std::string& raw, int line) {
    ConfigValue v;
    v.line = line;
    if (raw.empty()) {
        config_error(line, "missing value");
    }
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"') {
            config_error(line, "unterminated string");
        }
        std::string text;
        for (std::size_t k = 1; k + 1 < raw.size(); ++k) {
            if (raw[k] == '\\' && k + 2 < raw.size()) {
                ++k;
                text += raw[k] == 'n' ? '\n' : raw[k];
            } else {
                text += raw[k];
            }
        }
        v.kind = ConfigValue::Kind::String;
        v.text = std::move(text);
    } else if (raw == "true" || raw == "false") {
        v.kind = ConfigValue::Kind::Bool;
        v.text = raw;
    } else if (is_number(raw)) {
        v.kind = ConfigValue::Kind::Number;
        v.text = raw[0] == '+' ? raw.substr(1) : raw;
    } else {
        v.kind = ConfigValue::Kind::String;
        v.text = raw;
    }
    return v;
}

double as_double(const std::string& key, const ConfigValue& v) {
    if (v.kind != ConfigValue::Kind::Number) {
        config_error(v.line, "'" + key + "' must be a number");
    }
    double out = 0.0;
    std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
    return out;
}

std::uint64_t as_uint(const std::string& key, const ConfigValue& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
    if (v.kind != ConfigValue::Kind::Number || ec != std::errc() || ptr != v.text.data() + v.text.size()) {
        config_error(v.line, "'" + key + "' must be a non-negative integer");
    }
    return out;
}

std::size_t as_size(const std::string& key, const ConfigValue& v) {
    return static_cast<std::size_t>(as_uint(key, v));
}

bool as_bool(const std::string& key, const ConfigValue& v) {
    if (v.kind != ConfigValue::Kind::Bool) {
        config_error(v.line, "'" + key + "' must be true or false");
    }
    return v.text == "true";
}

const std::string& as_string(const std::string& key, const ConfigValue& v) {
    if (v.kind == ConfigValue::Kind::Bool) {
        config_error(v.line, "'" + key + "' must be a string");
    }
    return v.text;
}

std::string resolve_path(const std::string& path, const std::string& base_dir) {
    if (path.empty() || base_dir.empty() || std::filesystem::path(path).is_absolute()) {
        return path;
    }
    return (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
        }
        out += c == '\n' ? 'n' : c;
    }
    return out + "\"";
}

}  // namespace

std::map<std::string, ConfigValue> parse_config_text(const std::string& text) {
    std::map<std::string, ConfigValue> out;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = strip(without_comment(raw));
        if (s.empty()) {
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']') {
                config_error(line, "malformed section header");
            }
            section = strip(s.substr(1, s.size() - 2));
            if (!valid_key(section)) {
                config_error(line, "bad section name '" + section + "'");
            }
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            config_error(line, "expected 'key = value'");
        }
        const std::string key = strip(s.substr(0, eq));
        if (!valid_key(key)) {
            config_error(line, "bad key '" + key + "'");
        }
        const std::string full = section.empty() ? key : section + "." + key;
        if (out.count(full) != 0) {
            config_error(line, "duplicate key '" + full + "'");
        }
        out[full] = parse_value(strip(s.substr(eq + 1)), line);
    }
    return out;
}

FilterConfig ProjectConfig::filter_config() const {
    FilterConfig f = filter.window ? FilterConfig::for_window(*filter.window)
                                   : FilterConfig::for_horizon(filter.horizon_hours * 3600.0,
                                                               data.period_seconds);
    if (filter.lambda) {
        f.lambda = *filter.lambda;
    }
    return f;
}

ProjectConfig load_config(const std::map<std::string, ConfigValue>& values, const std::string& base_dir) {
    ProjectConfig c;
    using Setter = std::function<void(const std::string&, const ConfigValue&)>;
    const std::map<std::string, Setter> setters = {
        {"data.train", [&](auto& k, auto& v) { c.data.train = resolve_path(as_string(k, v), base_dir); }},
        {"data.stream", [&](auto& k, auto& v) { c.data.stream = resolve_path(as_string(k, v), base_dir); }},
        {"data.fault_log", [&](auto& k, auto& v) { c.data.fault_log = resolve_path(as_string(k, v), base_dir); }},
        {"data.period_seconds", [&](auto& k, auto& v) { c.data.period_seconds = as_double(k, v); }},
        {"cleaning.frozen_run", [&](auto& k, auto& v) { c.cleaning.frozen_run = as_size(k, v); }},
        {"cleaning.spike_factor", [&](auto& k, auto& v) { c.cleaning.spike_factor = as_double(k, v); }},
        {"cleaning.spike_window", [&](auto& k, auto& v) { c.cleaning.spike_window = as_size(k, v); }},
        {"cleaning.spike_min_history", [&](auto& k, auto& v) { c.cleaning.spike_min_history = as_size(k, v); }},
        {"cleaning.outlier_iqr", [&](auto& k, auto& v) { c.cleaning.outlier_iqr = as_double(k, v); }},
        {"cleaning.regular_fraction", [&](auto& k, auto& v) { c.cleaning.regular_fraction = as_double(k, v); }},
        {"train.rows", [&](auto& k, auto& v) { c.train.rows = as_size(k, v); }},
        {"train.cols", [&](auto& k, auto& v) { c.train.cols = as_size(k, v); }},
        {"train.epochs", [&](auto& k, auto& v) { c.train.epochs = as_size(k, v); }},
        {"train.sigma_initial", [&](auto& k, auto& v) { c.train.sigma_initial = as_double(k, v); }},
        {"train.sigma_final", [&](auto& k, auto& v) { c.train.sigma_final = as_double(k, v); }},
        {"train.seed", [&](auto& k, auto& v) { c.train.seed = as_uint(k, v); }},
        {"train.threads", [&](auto& k, auto& v) { c.train.threads = as_size(k, v); }},
        {"train.normalization", [&](auto& k, auto& v) {
             try {
                 c.normalization = parse_normalization(as_string(k, v));
             } catch (const Error& e) {
                 config_error(v.line, e.what());
             }
         }},
        {"filter.window", [&](auto& k, auto& v) { c.filter.window = as_size(k, v); }},
        {"filter.horizon_hours", [&](auto& k, auto& v) { c.filter.horizon_hours = as_double(k, v); }},
        {"filter.lambda", [&](auto& k, auto& v) { c.filter.lambda = as_double(k, v); }},
        {"monitor.open_after", [&](auto& k, auto& v) { c.monitor.persistence.open_after = as_size(k, v); }},
        {"monitor.close_after", [&](auto& k, auto& v) { c.monitor.persistence.close_after = as_size(k, v); }},
        {"monitor.contribution_threshold", [&](auto& k, auto& v) { c.monitor.contribution_threshold = as_double(k, v); }},
        {"monitor.max_missing_fraction", [&](auto& k, auto& v) { c.monitor.max_missing_fraction = as_double(k, v); }},
        {"monitor.warmup", [&](auto& k, auto& v) { c.monitor.warmup = as_size(k, v); }},
        {"monitor.contributions_always", [&](auto& k, auto& v) { c.monitor.contributions_always = as_bool(k, v); }},
        {"hotelling.ridge", [&](auto& k, auto& v) { c.hotelling.ridge = as_double(k, v); }},
        {"output.dir", [&](auto& k, auto& v) { c.output.dir = resolve_path(as_string(k, v), base_dir); }},
        {"output.plot", [&](auto& k, auto& v) { c.output.plot = as_bool(k, v); }},
    };

    for (const auto& [key, value] : values) {
        if (key.rfind("limits.", 0) == 0) {
            const auto dot = key.rfind('.');
            const std::string id = key.substr(7, dot > 7 ? dot - 7 : 0);
            const std::string field = key.substr(dot + 1);
            if (id.empty() || (field != "min" && field != "max")) {
                config_error(value.line, "limits take '[limits.<variable>]' with min and max keys, got '" + key + "'");
            }
            Limits& lim = c.cleaning.limits[id];
            (field == "min" ? lim.min : lim.max) = as_double(key, value);
            continue;
        }
        const auto it = setters.find(key);
        if (it == setters.end()) {
            config_error(value.line, "unknown key '" + key + "'");
        }
        it->second(key, value);
    }

    auto check = [](bool ok, const std::string& msg) {
        if (!ok) {
            config_error(0, msg);
        }
    };
    check(c.data.period_seconds > 0.0, "data.period_seconds must be positive");
    check(c.cleaning.frozen_run >= 2, "cleaning.frozen_run must be >= 2");
    check(c.cleaning.spike_factor > 0.0, "cleaning.spike_factor must be positive");
    check(c.cleaning.spike_window >= 2, "cleaning.spike_window must be >= 2");
    check(c.cleaning.outlier_iqr > 0.0, "cleaning.outlier_iqr must be positive");
    check(c.cleaning.regular_fraction >= 0.0 && c.cleaning.regular_fraction <= 1.0,
          "cleaning.regular_fraction must lie in [0, 1]");
    check((c.train.rows == 0) == (c.train.cols == 0), "train.rows and train.cols must be set together");
    check(c.train.epochs >= 1, "train.epochs must be >= 1");
    check(!c.train.sigma_initial || *c.train.sigma_initial > 0.0, "train.sigma_initial must be positive");
    check(c.train.sigma_final > 0.0, "train.sigma_final must be positive");
    check(c.train.threads >= 1, "train.threads must be >= 1");
    check(!c.filter.window || *c.filter.window >= 1, "filter.window must be >= 1");
    check(c.filter.horizon_hours > 0.0, "filter.horizon_hours must be positive");
    check(!c.filter.lambda || (*c.filter.lambda > 0.0 && *c.filter.lambda < 1.0),
          "filter.lambda must lie in (0, 1)");
    check(c.monitor.persistence.open_after >= 1, "monitor.open_after must be >= 1");
    check(c.monitor.persistence.close_after >= 1, "monitor.close_after must be >= 1");
    check(c.monitor.contribution_threshold > 0.0, "monitor.contribution_threshold must be positive");
    check(c.monitor.max_missing_fraction >= 0.0 && c.monitor.max_missing_fraction < 1.0,
          "monitor.max_missing_fraction must lie in [0, 1)");
    check(c.hotelling.ridge >= 0.0, "hotelling.ridge must be non-negative");
    for (const auto& [id, lim] : c.cleaning.limits) {
        check(!lim.min || !lim.max || *lim.min <= *lim.max, "limits." + id + ": min exceeds max");
    }
    return c;
}

ProjectConfig load_config_file(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error& e) {
        fail(ErrorKind::ConfigError, e.what());
    }
    const std::string dir = std::filesystem::path(path).parent_path().string();
    return load_config(parse_config_text(text), dir);
}

std::string render_config(const ProjectConfig& c) {
    std::ostringstream o;
    auto num = [](double v) { return format_number(v); };
    const FilterConfig f = c.filter_config();
    o << "[data]\n";
    o << "train = " << quote(c.data.train) << '\n';
    o << "stream = " << quote(c.data.stream) << '\n';
    o << "fault_log = " << quote(c.data.fault_log) << '\n';
    o << "period_seconds = " << num(c.data.period_seconds) << "\n\n";
    o << "[cleaning]\n";
    o << "frozen_run = " << c.cleaning.frozen_run << '\n';
    o << "spike_factor = " << num(c.cleaning.spike_factor) << '\n';
    o << "spike_window = " << c.cleaning.spike_window << '\n';
    o << "spike_min_history = " << c.cleaning.spike_min_history << '\n';
    o << "outlier_iqr = " << num(c.cleaning.outlier_iqr) << '\n';
    o << "regular_fraction = " << num(c.cleaning.regular_fraction) << "\n\n";
    for (const auto& [id, lim] : c.cleaning.limits) {
        o << "[limits." << id << "]\n";
        if (lim.min) {
            o << "min = " << num(*lim.min) << '\n';
        }
        if (lim.max) {
            o << "max = " << num(*lim.max) << '\n';
        }
        o << '\n';
    }
    o << "[train]\n";
    o << "rows = " << c.train.rows << '\n';
    o << "cols = " << c.train.cols << '\n';
    o << "epochs = " << c.train.epochs << '\n';
    if (c.train.sigma_initial) {
        o << "sigma_initial = " << num(*c.train.sigma_initial) << '\n';
    } else {
        o << "# sigma_initial defaults to max(rows, cols) / 2\n";
    }
    o << "sigma_final = " << num(c.train.sigma_final) << '\n';
    o << "seed = " << c.train.seed << '\n';
    o << "threads = " << c.train.threads << '\n';
    o << "normalization = " << quote(to_string(c.normalization)) << "\n\n";
    o << "[filter]\n";
    o << "window = " << f.window << '\n';
    o << "horizon_hours = " << num(c.filter.horizon_hours) << '\n';
    o << "lambda = " << num(f.lambda) << "\n\n";
    o << "[monitor]\n";
    o << "open_after = " << c.monitor.persistence.open_after << '\n';
    o << "close_after = " << c.monitor.persistence.close_after << '\n';
    o << "contribution_threshold = " << num(c.monitor.contribution_threshold) << '\n';
    o << "max_missing_fraction = " << num(c.monitor.max_missing_fraction) << '\n';
    o << "warmup = " << c.monitor.warmup.value_or(f.window) << '\n';
    o << "contributions_always = " << (c.monitor.contributions_always ? "true" : "false") << "\n\n";
    o << "[hotelling]\n";
    o << "ridge = " << num(c.hotelling.ridge) << "\n\n";
    o << "[output]\n";
    o << "dir = " << quote(c.output.dir) << '\n';
    o << "plot = " << (c.output.plot ? "true" : "false") << '\n';
    return o.str();
}

}  // namespace somcm
