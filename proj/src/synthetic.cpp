#include "somcm/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "somcm/error.hpp"
#include "somcm/rng.hpp"

namespace somcm {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kDaySeconds = 86400.0;

// Stream ids; disjoint ranges keep every stream independent of the others.
constexpr std::uint64_t kNoiseStream = 0;
constexpr std::uint64_t kFactorStream = 1u << 20;
constexpr std::uint64_t kFaultStream = 2u << 20;

}  // namespace

const char* to_string(FaultType type) noexcept {
    switch (type) {
        case FaultType::MeanShift: return "mean-shift";
        case FaultType::Drift: return "drift";
        case FaultType::SensorFreeze: return "sensor-freeze";
        case FaultType::SpikeTrain: return "spike-train";
        case FaultType::VarianceInflation: return "variance-inflation";
    }
    return "unknown";
}

FaultType parse_fault_type(const std::string& text) {
    for (auto t : {FaultType::MeanShift, FaultType::Drift, FaultType::SensorFreeze,
                   FaultType::SpikeTrain, FaultType::VarianceInflation}) {
        if (text == to_string(t)) {
            return t;
        }
    }
    fail(ErrorKind::InvalidInput, "unknown fault type '" + text + "'");
}

double SignalSpec::nominal_std(std::size_t j) const {
    const SignalVariable& v = variables.at(j);
    double var = 0.5 * v.daily_amplitude * v.daily_amplitude + v.noise_std * v.noise_std;
    for (double l : v.loadings) {
        var += l * l;
    }
    return std::sqrt(var);
}

SyntheticData generate(const SignalSpec& spec, const std::vector<FaultSpec>& faults) {
    const std::size_t n = spec.variables.size();
    const std::size_t rows = spec.samples;
    const std::size_t k_factors = spec.factors.size();
    require(n >= 1, ErrorKind::InvalidInput, "signal needs at least one variable");
    require(spec.period_seconds > 0.0, ErrorKind::InvalidInput, "sampling period must be positive");
    for (const auto& v : spec.variables) {
        require(v.noise_std >= 0.0, ErrorKind::InvalidInput, "noise std must be non-negative");
        require(v.loadings.size() == k_factors, ErrorKind::InvalidInput,
                "variable '" + v.id + "' needs one loading per latent factor");
    }
    for (const auto& f : spec.factors) {
        require(std::abs(f.phi) < 1.0, ErrorKind::InvalidInput, "AR(1) coefficient must satisfy |phi| < 1");
    }
    for (std::size_t a = 0; a < faults.size(); ++a) {
        const FaultSpec& f = faults[a];
        require(f.variable < n, ErrorKind::InvalidInput, "fault targets an unknown variable");
        require(f.duration >= 1 && f.onset + f.duration <= rows, ErrorKind::InvalidInput,
                "fault window lies outside the signal");
        for (std::size_t b = 0; b < a; ++b) {
            const FaultSpec& g = faults[b];
            const bool overlap = f.onset < g.onset + g.duration && g.onset < f.onset + f.duration;
            require(!(overlap && f.variable == g.variable), ErrorKind::InvalidInput,
                    "faults overlap on variable " + std::to_string(f.variable));
        }
    }

    // Latent factors, stationary from the first sample.
    Matrix factors(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k_factors));
    for (std::size_t k = 0; k < k_factors; ++k) {
        Rng rng(spec.seed, kFactorStream + k);
        const double phi = spec.factors[k].phi;
        const double innovation = std::sqrt(1.0 - phi * phi);
        double state = rng.normal();
        for (std::size_t t = 0; t < rows; ++t) {
            if (t > 0) {
                state = phi * state + innovation * rng.normal();
            }
            factors(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) =
                spec.factors[k].marginal == FactorMarginal::Uniform
                    ? std::sqrt(3.0) * std::erf(state / std::sqrt(2.0))
                    : state;
        }
    }

    std::vector<Timestamp> timestamps(rows);
    Matrix values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < rows; ++t) {
        timestamps[t] = spec.start + static_cast<Timestamp>(std::llround(static_cast<double>(t) * spec.period_seconds));
    }
    for (std::size_t j = 0; j < n; ++j) {
        const SignalVariable& v = spec.variables[j];
        Rng rng(spec.seed, kNoiseStream + j);
        for (std::size_t t = 0; t < rows; ++t) {
            const double seconds = static_cast<double>(timestamps[t] - spec.start);
            double x = v.base + v.daily_amplitude * std::sin(kTwoPi * seconds / kDaySeconds + v.daily_phase);
            for (std::size_t k = 0; k < k_factors; ++k) {
                x += v.loadings[k] * factors(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k));
            }
            x += v.noise_std * rng.normal();
            values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = x;
        }
    }

    SyntheticData out;
    out.labels.assign(rows, std::vector<std::uint16_t>(n, 0));
    for (std::size_t a = 0; a < faults.size(); ++a) {
        const FaultSpec& f = faults[a];
        const auto col = static_cast<Eigen::Index>(f.variable);
        const double sd = spec.nominal_std(f.variable);
        Rng rng(spec.seed, kFaultStream + a);
        const double held = values(static_cast<Eigen::Index>(f.onset > 0 ? f.onset - 1 : 0), col);
        for (std::size_t t = f.onset; t < f.onset + f.duration; ++t) {
            double& x = values(static_cast<Eigen::Index>(t), col);
            const double progress = static_cast<double>(t - f.onset + 1) / static_cast<double>(f.duration);
            switch (f.type) {
                case FaultType::MeanShift:
                    x += f.magnitude * sd;
                    break;
                case FaultType::Drift:
                    x += f.magnitude * sd * progress;
                    break;
                case FaultType::SensorFreeze:
                    x = held;
                    break;
                case FaultType::SpikeTrain:
                    if ((t - f.onset) % 30 == 0) {
                        x += f.magnitude * sd;
                    }
                    break;
                case FaultType::VarianceInflation:
                    x += f.magnitude * sd * rng.normal();
                    break;
            }
            out.labels[t][f.variable] = static_cast<std::uint16_t>(a + 1);
        }
    }

    std::vector<VariableInfo> info;
    info.reserve(n);
    for (const auto& v : spec.variables) {
        info.push_back({v.id, v.id, v.unit, v.min_limit, v.max_limit});
    }
    out.frame = ObservationFrame(std::move(timestamps), std::move(info), std::move(values));
    out.faults = faults;
    return out;
}

SignalSpec desk_bench_spec(std::size_t samples, std::uint64_t seed) {
    SignalSpec spec;
    spec.samples = samples;
    spec.seed = seed;
    spec.period_seconds = 60.0;
    // Unit load, thermal state, mechanical excitation; bounded envelopes.
    spec.factors = {{0.7, FactorMarginal::Uniform}, {0.5, FactorMarginal::Uniform}, {0.3, FactorMarginal::Uniform}};
    spec.variables = {
        {"gen_temp_1", "degC", 65.0, 3.0, 0.0, 0.4, {2.0, 1.5, 0.0}, 0.0, 130.0},
        {"gen_temp_2", "degC", 63.0, 3.0, 0.1, 0.4, {2.0, 1.4, 0.0}, 0.0, 130.0},
        {"bearing_temp", "degC", 48.0, 1.5, 0.3, 0.3, {1.0, 1.2, 0.0}, 0.0, 110.0},
        {"transformer_oil_temp", "degC", 55.0, 4.0, 0.5, 0.4, {1.5, 2.0, 0.0}, 0.0, 120.0},
        {"penstock_pressure", "bar", 28.0, 0.3, 1.0, 0.1, {0.8, 0.0, 0.1}, 0.0, 40.0},
        {"turbine_flow", "m3/s", 22.0, 2.0, 1.2, 0.5, {3.0, 0.0, 0.0}, 0.0, 90.0},
        {"vibration_x", "mm/s", 2.5, 0.1, 0.0, 0.05, {0.2, 0.0, 0.3}, 0.0, 20.0},
        {"vibration_y", "mm/s", 2.4, 0.1, 0.2, 0.05, {0.2, 0.0, 0.28}, 0.0, 20.0},
    };
    return spec;
}

ScoreResult score(const std::vector<WarningEvent>& events, const std::vector<FaultSpec>& faults,
                  std::size_t window, std::size_t stream_length) {
    ScoreResult out;
    out.events = events.size();

    std::vector<std::size_t> order(faults.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        order[k] = k;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return faults[a].onset < faults[b].onset; });

    auto detection_end = [&](const FaultSpec& f) {
        return f.onset + std::max(f.duration, window);
    };

    std::vector<bool> credited(events.size(), false);
    out.faults.resize(faults.size());
    for (std::size_t k : order) {
        const FaultSpec& f = faults[k];
        FaultScore& fs = out.faults[k];
        fs.fault = k;
        for (std::size_t e = 0; e < events.size(); ++e) {
            if (credited[e]) {
                continue;
            }
            const std::size_t s = events[e].start_index;
            if (s >= f.onset && s < detection_end(f)) {
                credited[e] = true;
                fs.detected = true;
                fs.delay = s - f.onset;
                fs.event_id = events[e].id;
                ++out.true_positives;
                break;
            }
        }
    }

    for (const auto& event : events) {
        const std::size_t s = event.start_index;
        const std::size_t last = event.end_index.value_or(stream_length > 0 ? stream_length - 1 : s);
        bool overlaps = false;
        for (const auto& f : faults) {
            overlaps = overlaps || (s < detection_end(f) && f.onset <= last);
        }
        if (!overlaps) {
            ++out.false_positives;
        }
    }
    return out;
}

}  // namespace somcm
