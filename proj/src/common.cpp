#include "somcm/error.hpp"
#include "somcm/types.hpp"

namespace somcm {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::ContractViolation: return "contract violation";
        case ErrorKind::InvalidInput: return "invalid input";
        case ErrorKind::InsufficientData: return "insufficient data";
        case ErrorKind::DegenerateInput: return "degenerate input";
        case ErrorKind::InvalidBaseline: return "invalid baseline";
        case ErrorKind::SingularCovariance: return "singular covariance";
        case ErrorKind::EmptyTrainingSet: return "empty training set";
        case ErrorKind::ConfigError: return "config error";
    }
    return "unknown";
}

const char* to_string(ChartStatus status) noexcept {
    switch (status) {
        case ChartStatus::InControl: return "in-control";
        case ChartStatus::OutOfControl: return "out-of-control";
        case ChartStatus::NoData: return "no-data";
    }
    return "unknown";
}

}  // namespace somcm
