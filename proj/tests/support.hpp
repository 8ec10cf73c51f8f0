#pragma once

#include <cstdint>

#include "somcm/pipeline.hpp"
#include "somcm/rng.hpp"
#include "somcm/som.hpp"
#include "somcm/synthetic.hpp"
#include "somcm/types.hpp"

namespace somcm::test {

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng(seed, 77);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = rng.normal();
        }
    }
    return m;
}

// Two cells side by side; grid distance 1.
inline SomModel two_cell_model(const RowVector& m0, const RowVector& m1, double sigma) {
    Matrix cb(2, m0.size());
    cb.row(0) = m0;
    cb.row(1) = m1;
    return SomModel(GridTopology(1, 2), cb, sigma);
}

inline RowVector row(std::initializer_list<double> values) {
    RowVector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index k = 0;
    for (double x : values) {
        v(k++) = x;
    }
    return v;
}

// Small, fast configuration for end-to-end tests.
inline ProjectConfig small_config() {
    ProjectConfig c;
    c.train.rows = 6;
    c.train.cols = 6;
    c.train.epochs = 8;
    c.filter.window = 60;
    return c;
}

// Two nominal days of the desk plant followed by one monitoring day.
inline const SyntheticData& small_plant() {
    static const SyntheticData data = generate(desk_bench_spec(3 * 1440, 11));
    return data;
}

inline const Bundle& small_bundle() {
    static const Bundle bundle = train_bundle(small_plant().frame.slice(0, 2 * 1440), {}, small_config()).bundle;
    return bundle;
}

}  // namespace somcm::test
