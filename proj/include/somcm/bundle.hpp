#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "somcm/hotelling.hpp"
#include "somcm/kpi.hpp"
#include "somcm/preprocess.hpp"
#include "somcm/som.hpp"

namespace somcm {

inline constexpr const char* kBundleFormat = "somcm-bundle/1";
inline constexpr const char* kSomFormat = "som-model/1";
inline constexpr const char* kHotellingFormat = "hotelling-baseline/1";

/// Bookkeeping about the rows a bundle was trained on.
struct TrainingSummary {
    std::size_t rows_input = 0;
    std::size_t rows_excluded = 0;  // inside merged fault windows
    std::size_t rows_dropped = 0;   // any non-valid active cell
    std::size_t rows_used = 0;
    std::vector<FaultWindow> fault_windows;  // merged
};

/// Everything the monitor needs, trained from one data set.
struct Bundle {
    std::vector<VariableInfo> variables;
    SomModel model;
    NominalBaseline baseline;
    HotellingBaseline hotelling;
    TrainingSummary training;
    std::string config;  // resolved key-value text used for training
};

nlohmann::json to_json(const SomModel& model);
SomModel som_from_json(const nlohmann::json& j);

nlohmann::json to_json(const NominalBaseline& baseline);
NominalBaseline baseline_from_json(const nlohmann::json& j);

nlohmann::json to_json(const HotellingBaseline& hotelling);
HotellingBaseline hotelling_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Bundle& bundle);

/// Checks keys, types and dimensions; throws InvalidInput naming the first
/// offending JSON path.
void validate_bundle(const nlohmann::json& j);

Bundle bundle_from_json(const nlohmann::json& j);

/// Stable text form (two-space indent, trailing newline).
std::string serialize_bundle(const Bundle& bundle);
Bundle read_bundle_file(const std::string& path);

}  // namespace somcm
