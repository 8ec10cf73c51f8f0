#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "somcm/preprocess.hpp"
#include "somcm/types.hpp"
#include "somcm/warning.hpp"

namespace somcm {

enum class FactorMarginal { Gaussian, Uniform };

struct LatentFactor {
    double phi = 0.98;  // AR(1) coefficient per sample; unit stationary variance
    /// Uniform maps the Gaussian AR(1) state through its CDF onto
    /// [-sqrt 3, sqrt 3], a bounded envelope with the same variance.
    FactorMarginal marginal = FactorMarginal::Gaussian;
};

struct SignalVariable {
    std::string id;
    std::string unit;
    double base = 0.0;
    double daily_amplitude = 0.0;
    double daily_phase = 0.0;        // radians
    double noise_std = 0.0;
    std::vector<double> loadings;    // one per latent factor
    std::optional<double> min_limit;
    std::optional<double> max_limit;
};

/// Plant-like multivariate signal:
///   x_j(t) = base_j + A_j sin(2 pi t / day + phase_j) + sum_k L_jk f_k(t) + s_j e_j(t)
/// with unit-variance AR(1) factors f_k and independent standard normal e_j.
/// Stream seeds depend only on (seed, variable index) or (seed, factor index).
struct SignalSpec {
    std::vector<SignalVariable> variables;
    std::vector<LatentFactor> factors;
    double period_seconds = 60.0;
    std::size_t samples = 0;
    Timestamp start = 1514764800;  // 2018-01-01T00:00:00Z
    std::uint64_t seed = 1;

    /// Stationary standard deviation of variable j (daily cycle included).
    double nominal_std(std::size_t j) const;
};

enum class FaultType { MeanShift, Drift, SensorFreeze, SpikeTrain, VarianceInflation };

const char* to_string(FaultType type) noexcept;
FaultType parse_fault_type(const std::string& text);

struct FaultSpec {
    FaultType type = FaultType::MeanShift;
    std::size_t variable = 0;
    std::size_t onset = 0;     // sample index
    std::size_t duration = 0;  // samples
    double magnitude = 0.0;    // in nominal standard deviations of the variable
};

struct SyntheticData {
    ObservationFrame frame;
    std::vector<std::vector<std::uint16_t>> labels;  // [row][variable]: 0 nominal, k = fault k (1-based)
    std::vector<FaultSpec> faults;
};

/// Deterministic given spec.seed. Throws InvalidInput for faults outside the
/// signal or overlapping on the same variable.
SyntheticData generate(const SignalSpec& spec, const std::vector<FaultSpec>& faults = {});

/// The eight-variable plant used by the benchmark suite.
SignalSpec desk_bench_spec(std::size_t samples, std::uint64_t seed);

struct FaultScore {
    std::size_t fault = 0;
    bool detected = false;
    std::optional<std::size_t> delay;  // samples from onset to the detecting event's opening
    std::optional<std::size_t> event_id;
};

struct ScoreResult {
    std::vector<FaultScore> faults;
    std::size_t true_positives = 0;   // detected faults
    std::size_t false_positives = 0;  // events overlapping no fault
    std::size_t events = 0;
};

/// A fault counts as detected by the first event opening inside
/// [onset, max(onset + duration, onset + window)). An event is credited to at
/// most one fault (the earliest), and is a false positive when it overlaps
/// no fault window. Open events extend to `stream_length`.
ScoreResult score(const std::vector<WarningEvent>& events, const std::vector<FaultSpec>& faults,
                  std::size_t window, std::size_t stream_length);

}  // namespace somcm
