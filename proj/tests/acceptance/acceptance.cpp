// Acceptance harness: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <json.hpp>

#include "somcm/bench.hpp"
#include "somcm/bundle.hpp"
#include "somcm/contribution.hpp"
#include "somcm/hotelling.hpp"
#include "somcm/io.hpp"
#include "somcm/kpi.hpp"
#include "somcm/rng.hpp"
#include "somcm/som.hpp"
#include "../cli_support.hpp"

using namespace somcm;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c, d);
    return buf;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.next() % (hi - lo + 1));
}

// Correlated Gaussian data: latent draws through a random mixing matrix.
Matrix correlated(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix mix(static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < mix.size(); ++i) {
        mix.data()[i] = rng.normal();
    }
    mix.diagonal().array() += 2.0;
    Matrix z(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z.data()[i] = rng.normal();
    }
    return z * mix;
}

// Blobs around a few random centres, uniform spread.
Matrix clustered(Rng& rng, std::size_t rows, std::size_t cols) {
    const std::size_t k = pick(rng, 1, 5);
    Matrix centres(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < centres.size(); ++i) {
        centres.data()[i] = 6.0 * rng.normal();
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const auto c = static_cast<Eigen::Index>(rng.next() % k);
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(r, j) = centres(c, j) + 2.0 * rng.uniform() - 1.0;
        }
    }
    return m;
}

Outcome kpi_identities() {
    Rng rng(101);
    std::size_t exact = 0;
    std::size_t half = 0;
    std::size_t in_range = 0;
    double worst_half = 0.0;
    constexpr std::size_t n = 1000000;
    for (std::size_t k = 0; k < n; ++k) {
        const double dmd = std::exp(20.0 * rng.uniform() - 10.0);
        const double dm = rng.uniform() < 0.05 ? 0.0 : dmd * std::exp(30.0 * rng.uniform() - 15.0);
        exact += kpi(dmd, dmd) == 1.0 ? 1 : 0;
        const double h = std::abs(kpi(dmd, 2.0 * dmd) - 0.5);
        worst_half = std::max(worst_half, h);
        half += h <= 1e-12 ? 1 : 0;
        const double v = kpi(dmd, dm);
        in_range += (v > 0.0 && v <= 1.0) ? 1 : 0;
    }
    const bool ok = exact == n && half == n && in_range == n;
    return {ok, std::to_string(n) + " inputs: kpi(DM_delta)=1 in " + std::to_string(exact) +
                    ", kpi(2 DM_delta)=0.5 in " + std::to_string(half) + fmt(" (max err %.1e)", worst_half) +
                    ", in (0,1] in " + std::to_string(in_range)};
}

Outcome som_monotonicity() {
    Rng rng(202);
    std::size_t increases = 0;
    std::size_t comparisons = 0;
    double worst = 0.0;
    for (int d = 0; d < 100; ++d) {
        const std::size_t rows = pick(rng, 50, 2000);
        const std::size_t cols = pick(rng, 1, 10);
        const Matrix data = d % 2 == 0 ? correlated(rng, rows, cols) : clustered(rng, rows, cols);
        TrainConfig tc;
        tc.rows = pick(rng, 1, 8);
        tc.cols = pick(rng, 1, 8);
        tc.epochs = 10;
        tc.seed = rng.next();
        const double sigma = 0.3 + 3.0 * rng.uniform();
        tc.sigma_initial = sigma;
        tc.sigma_final = sigma;
        const GridTopology grid(tc.rows, tc.cols);
        double previous = distortion_average(SomModel(grid, initial_codebook(grid, data, tc.seed), sigma), data);
        train_batch(data, tc, [&](std::size_t, double s, const Matrix& cb) {
            const double dm = distortion_average(SomModel(grid, cb, s), data);
            const double rel = (dm - previous) / std::max(previous, 1e-300);
            worst = std::max(worst, rel);
            increases += rel > 1e-9 ? 1 : 0;
            ++comparisons;
            previous = dm;
        });
    }
    return {increases == 0, "100 datasets, " + std::to_string(comparisons) + " epoch pairs at fixed sigma, " +
                                std::to_string(increases) + fmt(" increases (max relative change %+.2e)", worst)};
}

Outcome one_cell_fixed_point() {
    Rng rng(303);
    double worst = 0.0;
    for (int d = 0; d < 20; ++d) {
        const Matrix data = correlated(rng, pick(rng, 1, 3000), pick(rng, 1, 10));
        TrainConfig tc;
        tc.rows = 1;
        tc.cols = 1;
        tc.epochs = 1;
        tc.seed = rng.next();
        const SomModel model = train_batch(data, tc);
        const RowVector mean = data.colwise().mean();
        worst = std::max(worst, (model.codebook().row(0) - mean).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-10, fmt("20 datasets, max |m - mean| = %.2e", worst)};
}

Outcome contribution_normalization() {
    Rng rng(404);
    const Matrix train = correlated(rng, 3000, 8);
    TrainConfig tc;
    tc.rows = 6;
    tc.cols = 6;
    tc.epochs = 10;
    const SomModel model = train_batch(train, tc);

    double worst_sum = 0.0;
    for (int k = 0; k < 100000; ++k) {
        RowVector r(8);
        for (Eigen::Index j = 0; j < 8; ++j) {
            r(j) = 3.0 * rng.normal();
        }
        worst_sum = std::max(worst_sum, std::abs(contribution(model, r).values.sum() - 1.0));
    }

    RowVector mean = RowVector::Zero(8);
    for (Eigen::Index r = 0; r < train.rows(); ++r) {
        mean += contribution(model, train.row(r)).values;
    }
    mean /= static_cast<double>(train.rows());
    const RowVector base = baseline_contribution(model, train);
    const double worst_mean = (mean - base).cwiseAbs().maxCoeff();
    return {worst_sum <= 1e-9 && worst_mean <= 1e-9,
            fmt("1e5 patterns, max |sum - 1| = %.1e; training mean vs d_n(Delta) max diff %.1e", worst_sum,
                worst_mean)};
}

Outcome hotelling_trace() {
    Rng rng(505);
    double worst = 0.0;
    for (int d = 0; d < 100; ++d) {
        const std::size_t n = pick(rng, 1, 10);
        const std::size_t rows = pick(rng, n + 2, 3000);
        const Matrix data = correlated(rng, rows, n);
        const HotellingBaseline h = fit_hotelling(data);
        double sum = 0.0;
        for (Eigen::Index r = 0; r < data.rows(); ++r) {
            sum += h.t2(data.row(r));
        }
        const double N = static_cast<double>(rows);
        const double expected = static_cast<double>(n) * (N - 1.0) / N;
        worst = std::max(worst, std::abs(sum / N - expected) / expected);
    }
    return {worst <= 1e-8, fmt("100 datasets, max relative error %.2e", worst)};
}

Outcome hotelling_affine() {
    Rng rng(606);
    double worst = 0.0;
    for (int d = 0; d < 100; ++d) {
        const std::size_t n = pick(rng, 1, 10);
        const Matrix data = correlated(rng, pick(rng, n + 5, 2000), n);
        Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        RowVector b(static_cast<Eigen::Index>(n));
        do {
            for (Eigen::Index i = 0; i < a.size(); ++i) {
                a.data()[i] = rng.normal();
            }
        } while (std::abs(a.determinant()) < 0.1);
        for (Eigen::Index j = 0; j < b.size(); ++j) {
            b(j) = 100.0 * rng.normal();
        }
        const Matrix mapped = (data * a.transpose()).rowwise() + b;
        const HotellingBaseline h0 = fit_hotelling(data);
        const HotellingBaseline h1 = fit_hotelling(mapped);
        const Matrix fresh = correlated(rng, 50, n);
        const Matrix fresh_mapped = (fresh * a.transpose()).rowwise() + b;
        auto check = [&](const Matrix& x, const Matrix& y) {
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
                const double t0 = h0.t2(x.row(r));
                const double t1 = h1.t2(y.row(r));
                worst = std::max(worst, std::abs(t1 - t0) / std::max(t0, 1e-12));
            }
        };
        check(data, mapped);
        check(fresh, fresh_mapped);
    }
    return {worst <= 1e-8, fmt("100 random maps, max relative t2 change %.2e", worst)};
}

Outcome hand_oracles() {
    Matrix one(2, 1);
    one << 0.0, 2.0;
    RowVector three(1);
    three << 3.0;
    const double t2 = fit_hotelling(one).t2(three);

    Matrix cb(2, 1);
    cb << 0.0, 2.0;
    const SomModel two(GridTopology(1, 2), cb, 1.0);
    RowVector zero(1);
    zero << 0.0;
    const double dm = distortion_single(two, zero);
    const double rounded = std::round(dm * 1e5) / 1e5;
    const bool ok = std::abs(t2 - 2.0) <= 1e-12 && std::abs(dm - 2.0 * std::exp(-0.5)) <= 1e-12 && rounded == 1.21306;
    return {ok, fmt("t2(3) = %.15g, two-cell DM = %.15g", t2, dm)};
}

const BenchRow& row_of(const BenchReport& r, const std::string& scenario, const std::string& detector) {
    return *std::find_if(r.rows.begin(), r.rows.end(),
                         [&](const BenchRow& x) { return x.scenario == scenario && x.detector == detector; });
}

Outcome desk_bench_detection(const BenchReport& r) {
    const BenchRow& shift = row_of(r, "mean-shift", "som-kpi");
    const BenchRow& nominal = row_of(r, "nominal", "som-kpi");
    const double seeds = static_cast<double>(r.seeds);
    const double prompt = static_cast<double>(shift.detected_prompt) / seeds;
    const double top = shift.detected == 0 ? 0.0 : static_cast<double>(shift.top_matches) / shift.detected;
    const double fp = static_cast<double>(nominal.runs_within_fp_budget) / seeds;
    const bool ok = prompt >= 0.9 && top >= 0.95 && fp >= 0.9 && r.seconds <= 600.0;
    std::string detail = "mean shift within W+K " + std::to_string(shift.detected_prompt) + "/" +
                         std::to_string(r.seeds) + (prompt >= 0.9 ? " ok" : " LOW") + "; top contribution " +
                         std::to_string(shift.top_matches) + "/" + std::to_string(shift.detected) +
                         (top >= 0.95 ? " ok" : " LOW") + "; nominal seeds with <=1 FP/10 d " +
                         std::to_string(nominal.runs_within_fp_budget) + "/" + std::to_string(r.seeds) +
                         (fp >= 0.9 ? " ok" : " LOW") + fmt("; suite %.0f s", r.seconds) +
                         (r.seconds <= 600.0 ? " ok" : " SLOW");
    return {ok, detail};
}

Outcome desk_bench_freeze(const BenchReport& r) {
    std::size_t caught = 0;
    for (std::uint64_t s = 0; s < r.seeds; ++s) {
        bool any = false;
        for (const auto& run : r.runs) {
            any = any || (run.scenario == "sensor-freeze" && run.seed == s + 1 && run.detected);
        }
        caught += any ? 1 : 0;
    }
    const BenchRow& som = row_of(r, "sensor-freeze", "som-kpi");
    const BenchRow& t2 = row_of(r, "sensor-freeze", "hotelling-t2");
    const bool ok = static_cast<double>(caught) >= 0.9 * static_cast<double>(r.seeds) && som.mean_delay &&
                    t2.mean_delay;
    return {ok, std::to_string(caught) + "/" + std::to_string(r.seeds) +
                    " seeds caught by either detector; mean delay som-kpi " +
                    fmt("%.1f, hotelling-t2 %.1f samples", som.mean_delay.value_or(NAN), t2.mean_delay.value_or(NAN))};
}

Outcome determinism() {
    namespace fs = std::filesystem;
    using test::cli;
    using test::slurp;
    const fs::path dir = test::scratch("acceptance-determinism");
    if (cli(dir, "--seed 7 --out . gen --train-days 7 --monitor-days 1").code != 0 ||
        cli(dir, "--out a train train.csv").code != 0 || cli(dir, "--out b train train.csv").code != 0 ||
        cli(dir, "--out c retrain --bundle a/bundle.json --history train.csv").code != 0) {
        return {false, "a CLI command failed"};
    }
    const std::string a = slurp(dir / "a" / "bundle.json");
    const bool identical = !a.empty() && a == slurp(dir / "b" / "bundle.json");
    const json j0 = json::parse(a);
    const json j1 = json::parse(slurp(dir / "c" / "bundle.json"));
    double worst = 0.0;
    for (const char* k : {"dm_delta", "kpi_mean", "kpi_std", "lcl"}) {
        worst = std::max(worst, std::abs(j0["baseline"][k].get<double>() - j1["baseline"][k].get<double>()));
    }
    for (const char* k : {"t2_mean", "t2_std", "ucl"}) {
        worst = std::max(worst, std::abs(j0["hotelling"][k].get<double>() - j1["hotelling"][k].get<double>()));
    }
    return {identical && worst <= 1e-12, std::string("train twice ") + (identical ? "byte-identical" : "DIFFERENT") +
                                             fmt("; retrain without new data max statistic change %.1e", worst)};
}

Outcome performance() {
    Rng rng(1111);
    const Matrix data = correlated(rng, 50000, 60);
    TrainConfig tc;
    tc.rows = 10;
    tc.cols = 10;
    tc.epochs = 30;
    tc.threads = 1;
    const auto t0 = Clock::now();
    const SomModel model = train_batch(data, tc);
    const double train_s = seconds_since(t0);

    const NominalBaseline baseline = compute_baseline(model, data, FilterConfig::for_window(720));
    const HotellingBaseline hotelling = fit_hotelling(data);
    const Matrix stream = correlated(rng, 20000, 60);
    KpiMonitor kpi_chart(model, baseline);
    T2Monitor t2_chart(hotelling);
    const auto t1 = Clock::now();
    for (Eigen::Index r = 0; r < stream.rows(); ++r) {
        kpi_chart.step(60 * r, stream.row(r));
        t2_chart.step(60 * r, stream.row(r));
    }
    const double rate = static_cast<double>(stream.rows()) / seconds_since(t1);
    return {train_s <= 60.0 && rate >= 10000.0,
            fmt("train 50000 x 60 on 10 x 10, 30 epochs: %.1f s; monitoring both charts at n = 60: %.0f patterns/s",
                train_s, rate)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget;  // seconds, 0 = none beyond the criterion itself
        std::function<Outcome()> run;
    };

    BenchReport bench;
    const std::vector<Criterion> criteria = {
        {1, "KPI identities", 1.0, kpi_identities},
        {2, "batch SOM monotonicity", 30.0, som_monotonicity},
        {3, "one-cell SOM fixed point", 1.0, one_cell_fixed_point},
        {4, "contribution normalization", 5.0, contribution_normalization},
        {5, "Hotelling trace identity", 5.0, hotelling_trace},
        {6, "Hotelling affine invariance", 5.0, hotelling_affine},
        {7, "hand oracles", 1.0, hand_oracles},
        {8, "desk-bench mean-shift detection",
         0.0,
         [&] {
             bench = run_bench(bench_suite("desk-bench"), ProjectConfig{});
             return desk_bench_detection(bench);
         }},
        {9, "desk-bench sensor freeze", 0.0, [&] { return desk_bench_freeze(bench); }},
        {10, "end-to-end determinism", 0.0, determinism},
        {11, "performance", 0.0, performance},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double took = seconds_since(t0);
        if (c.budget > 0.0 && took > c.budget) {
            o.pass = false;
            o.detail += " (over time budget)";
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s criterion %2d  %-32s %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), took);
        std::fflush(stdout);
    }
    if (!bench.rows.empty()) {
        std::cout << '\n' << bench_markdown(bench);
    }
    std::printf("\n%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
