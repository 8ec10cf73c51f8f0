#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "somcm/types.hpp"

namespace somcm {

/// Parses "YYYY-MM-DDTHH:MM[:SS[.fff]]" with an optional "Z" or "+HH:MM"
/// offset ('T' may also be a space). Fractional seconds are truncated.
/// Returns nullopt for anything else.
std::optional<Timestamp> parse_iso8601(std::string_view text);

/// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(Timestamp t);

/// Compact UTC stamp for file names: "YYYYMMDDTHHMMSSZ".
std::string format_compact(Timestamp t);

}  // namespace somcm
