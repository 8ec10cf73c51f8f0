#include <doctest.h>

#include <cmath>

#include "somcm/error.hpp"
#include "somcm/hotelling.hpp"
#include "../support.hpp"

using namespace somcm;
using test::row;

TEST_CASE("one-dimensional hand example") {
    Matrix train(2, 1);
    train << 0.0, 2.0;
    const HotellingBaseline h = fit_hotelling(train);
    CHECK(h.mean()(0) == 1.0);
    CHECK(h.covariance()(0, 0) == 2.0);
    CHECK(h.t2(row({3.0})) == 2.0);
    CHECK(h.t2(row({1.0})) == 0.0);
}

TEST_CASE("identity covariance reduces to squared euclidean distance") {
    const HotellingBaseline h(Vector::Zero(3), Eigen::MatrixXd::Identity(3, 3), 3.0, 1.0);
    CHECK(h.t2(row({0.0, 1.0, 0.0})) == doctest::Approx(1.0));
    CHECK(h.t2(row({1.0, 2.0, 2.0})) == doctest::Approx(9.0));
    CHECK(h.ucl() == 6.0);
}

TEST_CASE("mean training t2 is n(N-1)/N") {
    const Matrix train = test::gaussian_matrix(57, 4, 3);
    const HotellingBaseline h = fit_hotelling(train);
    double sum = 0.0;
    for (Eigen::Index r = 0; r < train.rows(); ++r) {
        sum += h.t2(train.row(r));
    }
    CHECK(sum / 57.0 == doctest::Approx(4.0 * 56.0 / 57.0).epsilon(1e-10));
    CHECK(h.t2_mean() == doctest::Approx(4.0 * 56.0 / 57.0).epsilon(1e-10));
}

TEST_CASE("affine maps leave t2 unchanged") {
    const Matrix train = test::gaussian_matrix(80, 3, 9);
    Matrix a = test::gaussian_matrix(3, 3, 10);
    a.diagonal().array() += 3.0;
    const RowVector shift = row({5.0, -1.0, 2.0});
    const Matrix mapped = (train * a.transpose()).rowwise() + shift;
    const HotellingBaseline h = fit_hotelling(train);
    const HotellingBaseline hm = fit_hotelling(mapped);
    const Matrix probe = test::gaussian_matrix(20, 3, 11) * 2.0;
    for (Eigen::Index r = 0; r < probe.rows(); ++r) {
        const RowVector p = probe.row(r);
        const RowVector pm = p * a.transpose() + shift;
        CHECK(hm.t2(pm) == doctest::Approx(h.t2(p)).epsilon(1e-8));
    }
}

TEST_CASE("ill-conditioned maps keep t2 to 1e-9") {
    const Matrix train = test::gaussian_matrix(500, 4, 21);
    Matrix a = Matrix::Identity(4, 4);
    a(1, 0) = 1.0;
    a(1, 1) = 1e-2;
    a(3, 2) = 300.0;
    const RowVector shift = row({1e3, -50.0, 7.0, 2e4});
    const Matrix mapped = (train * a.transpose()).rowwise() + shift;
    const HotellingBaseline h = fit_hotelling(train);
    const HotellingBaseline hm = fit_hotelling(mapped);
    for (Eigen::Index r = 0; r < 50; ++r) {
        CHECK(hm.t2(mapped.row(r)) == doctest::Approx(h.t2(train.row(r))).epsilon(1e-9));
    }
}

TEST_CASE("data factor reproduces the covariance") {
    const Matrix train = test::gaussian_matrix(200, 5, 4);
    const HotellingBaseline h = fit_hotelling(train);
    const CovarianceFactor& f = h.factor();
    const Eigen::MatrixXd p = f.permutation;
    const Eigen::MatrixXd rebuilt = p.transpose() * f.lower * f.diagonal.asDiagonal() * f.lower.transpose() * p;
    CHECK((rebuilt - h.covariance()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((h.covariance_inverse() * h.covariance() - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <=
          1e-12);

    const HotellingBaseline ridge = fit_hotelling(train, {1e-9});
    CHECK(ridge.t2(train.row(3)) == doctest::Approx(h.t2(train.row(3))).epsilon(1e-6));
}

TEST_CASE("duplicate columns are singular") {
    Matrix train = test::gaussian_matrix(30, 2, 1);
    Matrix dup(30, 3);
    dup << train, train.col(0);
    try {
        fit_hotelling(dup);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularCovariance);
    }
    HotellingOptions ridge;
    ridge.ridge = 1e-3;
    CHECK_NOTHROW(fit_hotelling(dup, ridge));
}

TEST_CASE("t2 chart") {
    const Matrix train = test::gaussian_matrix(200, 2, 4);
    const HotellingBaseline h = fit_hotelling(train);
    SUBCASE("stream at the mean never leaves control") {
        T2Monitor mon(h);
        for (Timestamp t = 0; t < 100; ++t) {
            CHECK(mon.step(t, h.mean().transpose()).point.status == ChartStatus::InControl);
        }
        CHECK(mon.events().empty());
    }
    SUBCASE("a jump opens after K points and records the maximum") {
        T2Monitor mon(h);
        const RowVector far = h.mean().transpose() + row({20.0, 0.0});
        Timestamp t = 0;
        mon.step(t++, h.mean().transpose());
        mon.step(t++, far);
        mon.step(t++, far);
        CHECK(mon.events().empty());
        mon.step(t++, far * 1.1);
        REQUIRE(mon.events().size() == 1);
        CHECK(mon.events()[0].start_index == 3);
        CHECK(mon.events()[0].detector == "hotelling-t2");
        CHECK(mon.events()[0].extreme_index == 3);
    }
    SUBCASE("missing components are no-data") {
        T2Monitor mon(h);
        CHECK(mon.step(0, row({kNaN, 0.0})).point.status == ChartStatus::NoData);
    }
}
