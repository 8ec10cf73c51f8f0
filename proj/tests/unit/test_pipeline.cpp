#include <doctest.h>

#include <cmath>

#include "somcm/error.hpp"
#include "somcm/pipeline.hpp"
#include "../support.hpp"

using namespace somcm;

namespace {

constexpr std::size_t kDay = 1440;

ObservationFrame drop_column(const ObservationFrame& f, std::size_t col) {
    std::vector<VariableInfo> vars;
    Matrix m(static_cast<Eigen::Index>(f.rows()), static_cast<Eigen::Index>(f.cols() - 1));
    for (std::size_t j = 0, k = 0; j < f.cols(); ++j) {
        if (j == col) {
            continue;
        }
        vars.push_back(f.variables()[j]);
        m.col(static_cast<Eigen::Index>(k++)) = f.values().col(static_cast<Eigen::Index>(j));
    }
    return ObservationFrame(f.timestamps(), std::move(vars), std::move(m));
}

}  // namespace

TEST_CASE("train then monitor a nominal day") {
    const Bundle& b = test::small_bundle();
    CHECK(b.training.rows_used == 2 * kDay);
    CHECK(b.model.cells() == 36);
    CHECK(b.baseline.lcl < b.baseline.kpi_mean);

    const ObservationFrame stream = test::small_plant().frame.slice(2 * kDay, 3 * kDay);
    const MonitorOutput out = monitor_stream(b, stream, test::small_config().monitor);
    REQUIRE(out.kpi.size() == kDay);
    REQUIRE(out.t2.size() == kDay);
    CHECK(out.active_ids.size() == 8);
    std::size_t ooc = 0;
    for (const auto& row : out.kpi) {
        ooc += row.point.status == ChartStatus::OutOfControl ? 1 : 0;
    }
    CHECK(ooc < kDay / 10);
}

TEST_CASE("training is deterministic") {
    const Bundle again = train_bundle(test::small_plant().frame.slice(0, 2 * kDay), {}, test::small_config()).bundle;
    CHECK(serialize_bundle(again) == serialize_bundle(test::small_bundle()));
}

TEST_CASE("a mean shift is flagged on the faulted variable") {
    const SignalSpec spec = desk_bench_spec(3 * kDay, 11);
    const SyntheticData data = generate(spec, {{FaultType::MeanShift, 2, 2 * kDay + 300, 600, 6.0}});
    const MonitorOutput out =
        monitor_stream(test::small_bundle(), data.frame.slice(2 * kDay, 3 * kDay), test::small_config().monitor);
    REQUIRE_FALSE(out.som_events.empty());
    const WarningEvent& e = out.som_events.front();
    CHECK(e.start_index >= 300);
    CHECK(e.start_index < 300 + 60 + 3);
    REQUIRE_FALSE(e.implicated.empty());
    CHECK(out.active_ids[e.implicated.front().variable] == spec.variables[2].id);
}

TEST_CASE("a missing stream variable is an input error") {
    const ObservationFrame stream = drop_column(test::small_plant().frame.slice(2 * kDay, 3 * kDay), 4);
    CHECK_THROWS_AS(monitor_stream(test::small_bundle(), stream, {}), Error);
    try {
        monitor_stream(test::small_bundle(), stream, {});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidInput);
        CHECK(std::string(e.what()).find(test::small_bundle().variables[4].id) != std::string::npos);
    }
}

TEST_CASE("retrain without new rows reproduces the bundle") {
    const ObservationFrame history = test::small_plant().frame.slice(0, 2 * kDay);
    const RetrainOutcome r = retrain_bundle(history, nullptr, {}, test::small_config());
    CHECK(r.rows_appended == 0);
    CHECK(r.history.rows() == history.rows());
    const Bundle& a = test::small_bundle();
    const Bundle& b = r.trained.bundle;
    CHECK(std::abs(a.baseline.lcl - b.baseline.lcl) <= 1e-12);
    CHECK(std::abs(a.baseline.dm_delta - b.baseline.dm_delta) <= 1e-12);
    CHECK((a.model.codebook() - b.model.codebook()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("retrain appends only later rows") {
    const ObservationFrame& all = test::small_plant().frame;
    const ObservationFrame history = all.slice(0, kDay);
    const ObservationFrame fresh = all.slice(kDay - 100, 2 * kDay);
    const RetrainOutcome r = retrain_bundle(history, &fresh, {}, test::small_config());
    CHECK(r.rows_skipped == 100);
    CHECK(r.rows_appended == kDay);
    CHECK(r.history.rows() == 2 * kDay);
    CHECK(r.trained.bundle.training.rows_used == 2 * kDay);
}

TEST_CASE("fault windows are excluded from training") {
    const ObservationFrame raw = test::small_plant().frame.slice(0, 2 * kDay);
    const Timestamp t0 = raw.timestamps()[100];
    const Timestamp t1 = raw.timestamps()[399];
    const FaultWindowLog log({{t0, t1, "trip"}});
    const TrainOutcome out = train_bundle(raw, log, test::small_config());
    CHECK(out.bundle.training.rows_excluded == 300);
    CHECK(out.bundle.training.rows_used == 2 * kDay - 300);
    REQUIRE(out.bundle.training.fault_windows.size() == 1);
    CHECK(out.bundle.training.fault_windows.front().note == "trip");
}
