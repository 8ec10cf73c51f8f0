#include <doctest.h>

#include <cmath>

#include "somcm/error.hpp"
#include "somcm/synthetic.hpp"

using namespace somcm;

namespace {

double column_mean(const Matrix& m, Eigen::Index col, std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t r = begin; r < end; ++r) {
        s += m(static_cast<Eigen::Index>(r), col);
    }
    return s / static_cast<double>(end - begin);
}

}  // namespace

TEST_CASE("noise-free signal sits at the base levels") {
    SignalSpec spec = desk_bench_spec(100, 3);
    for (auto& v : spec.variables) {
        v.daily_amplitude = 0.0;
        v.noise_std = 0.0;
        for (double& l : v.loadings) {
            l = 0.0;
        }
    }
    const SyntheticData d = generate(spec);
    for (std::size_t j = 0; j < spec.variables.size(); ++j) {
        CHECK(d.frame.values().col(static_cast<Eigen::Index>(j)).isConstant(spec.variables[j].base));
    }
}

TEST_CASE("generation is deterministic per seed") {
    const SyntheticData a = generate(desk_bench_spec(2000, 5));
    const SyntheticData b = generate(desk_bench_spec(2000, 5));
    const SyntheticData c = generate(desk_bench_spec(2000, 6));
    CHECK(a.frame.values() == b.frame.values());
    CHECK(a.frame.timestamps() == b.frame.timestamps());
    CHECK(a.frame.values() != c.frame.values());
}

TEST_CASE("adding a variable leaves the other streams untouched") {
    SignalSpec spec = desk_bench_spec(500, 2);
    const SyntheticData before = generate(spec);
    SignalVariable extra = spec.variables.back();
    extra.id = "extra";
    spec.variables.push_back(extra);
    const SyntheticData after = generate(spec);
    CHECK(after.frame.values().leftCols(8) == before.frame.values());
}

TEST_CASE("uniform factors stay inside their envelope") {
    SignalSpec spec;
    spec.samples = 5000;
    spec.factors = {{0.7, FactorMarginal::Uniform}};
    spec.variables = {{"x", "", 0.0, 0.0, 0.0, 0.0, {1.0}, std::nullopt, std::nullopt}};
    const SyntheticData d = generate(spec);
    const auto x = d.frame.values().col(0);
    CHECK(x.maxCoeff() <= std::sqrt(3.0));
    CHECK(x.minCoeff() >= -std::sqrt(3.0));
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("a 4 sigma mean shift moves the window mean by 4 nominal std") {
    const std::size_t rows = 30 * 1440;
    const SignalSpec spec = desk_bench_spec(rows, 11);
    for (std::size_t j : {0u, 4u, 7u}) {
        const FaultSpec f{FaultType::MeanShift, j, rows / 2, 2880, 4.0};
        const SyntheticData d = generate(spec, {f});
        const double sd = spec.nominal_std(j);
        const double inside = column_mean(d.frame.values(), static_cast<Eigen::Index>(j), f.onset, f.onset + f.duration);
        const double before = column_mean(d.frame.values(), static_cast<Eigen::Index>(j), 0, f.onset);
        CHECK((inside - before) / sd == doctest::Approx(4.0).epsilon(0.05));
        CHECK(std::abs((inside - before) / sd - 4.0) <= 0.2);
    }
}

TEST_CASE("fault types and labels") {
    const SignalSpec spec = desk_bench_spec(1000, 1);
    const SyntheticData clean = generate(spec);
    const std::vector<FaultSpec> faults = {
        {FaultType::SensorFreeze, 2, 100, 50, 0.0},
        {FaultType::Drift, 3, 200, 100, 4.0},
        {FaultType::SpikeTrain, 4, 400, 100, 6.0},
        {FaultType::VarianceInflation, 5, 600, 100, 3.0},
    };
    const SyntheticData d = generate(spec, faults);
    CHECK(d.frame.rows() == d.labels.size());
    CHECK(d.labels[0].size() == d.frame.cols());
    for (std::size_t t = 100; t < 150; ++t) {
        CHECK(d.frame.values()(static_cast<Eigen::Index>(t), 2) == clean.frame.values()(99, 2));
        CHECK(d.labels[t][2] == 1);
    }
    CHECK(d.labels[99][2] == 0);
    CHECK(d.labels[150][2] == 0);
    const double drift_end = d.frame.values()(299, 3) - clean.frame.values()(299, 3);
    CHECK(drift_end == doctest::Approx(4.0 * spec.nominal_std(3)));
    CHECK(d.frame.values()(400, 4) - clean.frame.values()(400, 4) == doctest::Approx(6.0 * spec.nominal_std(4)));
    CHECK(d.frame.values()(401, 4) == clean.frame.values()(401, 4));
    CHECK(d.labels[650][5] == 4);
    CHECK(parse_fault_type("sensor-freeze") == FaultType::SensorFreeze);
    CHECK_THROWS_AS(parse_fault_type("melt"), Error);
}

TEST_CASE("invalid fault plans are rejected") {
    const SignalSpec spec = desk_bench_spec(100, 1);
    CHECK_THROWS_AS(generate(spec, {{FaultType::MeanShift, 0, 90, 20, 1.0}}), Error);
    CHECK_THROWS_AS(generate(spec, {{FaultType::MeanShift, 9, 10, 20, 1.0}}), Error);
    CHECK_THROWS_AS(generate(spec, {{FaultType::MeanShift, 1, 10, 20, 1.0}, {FaultType::Drift, 1, 25, 10, 1.0}}),
                    Error);
    CHECK_NOTHROW(generate(spec, {{FaultType::MeanShift, 1, 10, 20, 1.0}, {FaultType::Drift, 2, 25, 10, 1.0}}));
}

TEST_CASE("scoring") {
    const std::vector<FaultSpec> faults = {{FaultType::MeanShift, 0, 100, 50, 4.0},
                                           {FaultType::MeanShift, 1, 300, 50, 4.0}};
    auto event = [](std::size_t id, std::size_t start, std::optional<std::size_t> end) {
        WarningEvent e;
        e.id = id;
        e.start_index = start;
        e.end_index = end;
        return e;
    };
    SUBCASE("perfect detector") {
        const ScoreResult s = score({event(1, 100, 149), event(2, 300, 349)}, faults, 20, 1000);
        CHECK(s.true_positives == 2);
        CHECK(s.false_positives == 0);
        CHECK(*s.faults[0].delay == 0);
        CHECK(*s.faults[1].delay == 0);
    }
    SUBCASE("no events") {
        const ScoreResult s = score({}, faults, 20, 1000);
        CHECK(s.true_positives == 0);
        CHECK(s.false_positives == 0);
        CHECK(!s.faults[0].detected);
    }
    SUBCASE("one event across two faults") {
        const ScoreResult s = score({event(1, 120, 320)}, faults, 20, 1000);
        CHECK(s.faults[0].detected);
        CHECK(*s.faults[0].delay == 20);
        CHECK(!s.faults[1].detected);
        CHECK(s.false_positives == 0);
    }
    SUBCASE("late and unrelated events") {
        const ScoreResult s = score({event(1, 500, 510), event(2, 900, std::nullopt)}, faults, 20, 1000);
        CHECK(s.false_positives == 2);
    }
    SUBCASE("detection window extends to W after onset") {
        const std::vector<FaultSpec> short_fault = {{FaultType::MeanShift, 0, 100, 5, 4.0}};
        CHECK(score({event(1, 115, 130)}, short_fault, 20, 1000).faults[0].detected);
        CHECK(!score({event(1, 125, 130)}, short_fault, 20, 1000).faults[0].detected);
    }
}
