#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "somcm/hotelling.hpp"
#include "somcm/kpi.hpp"
#include "somcm/preprocess.hpp"
#include "somcm/som.hpp"

namespace somcm {

/// One scalar from the key-value file; numbers keep their source text so
/// 64-bit integers survive.
struct ConfigValue {
    enum class Kind { Bool, Number, String };
    Kind kind = Kind::String;
    std::string text;
    int line = 0;
};

/// Parsed "[section]" / "key = value" document. Keys are "section.key";
/// "[limits.gen_temp_1]" with "max = 130" yields "limits.gen_temp_1.max".
/// Values: true/false, numbers, "double-quoted" or bare strings. '#'
/// starts a comment outside quotes. Throws ConfigError with the line number.
std::map<std::string, ConfigValue> parse_config_text(const std::string& text);

struct DataConfig {
    std::string train;      // training CSV
    std::string stream;     // monitoring CSV
    std::string fault_log;  // optional fault-window CSV
    double period_seconds = 60.0;
};

struct FilterSection {
    std::optional<std::size_t> window;       // samples; default horizon / period
    double horizon_hours = 12.0;
    std::optional<double> lambda;            // default from the window
};

struct OutputConfig {
    std::string dir = "out";
    bool plot = true;
};

struct ProjectConfig {
    DataConfig data;
    CleaningConfig cleaning;
    TrainConfig train;
    NormalizationMethod normalization = NormalizationMethod::ZScore;
    FilterSection filter;
    MonitorSettings monitor;
    HotellingOptions hotelling;
    OutputConfig output;

    /// W and lambda after defaults.
    FilterConfig filter_config() const;
};

/// Unknown sections or keys and ill-typed values throw ConfigError. Relative
/// data paths are resolved against `base_dir` when it is not empty.
ProjectConfig load_config(const std::map<std::string, ConfigValue>& values,
                          const std::string& base_dir = {});
ProjectConfig load_config_file(const std::string& path);

/// Every key with its resolved value; parses back to an equal config.
std::string render_config(const ProjectConfig& config);

}  // namespace somcm
