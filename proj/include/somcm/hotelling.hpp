#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>

#include "somcm/types.hpp"
#include "somcm/warning.hpp"

namespace somcm {

inline constexpr double kMaxCovarianceCondition = 1e12;

struct HotellingOptions {
    double ridge = 0.0;  // adds ridge * I to the covariance before factoring
};

/// C = P^T L D L^T P with L unit lower triangular and D > 0.
struct CovarianceFactor {
    Eigen::PermutationMatrix<Eigen::Dynamic> permutation;
    Eigen::MatrixXd lower;
    Vector diagonal;
};

/// Square-root-free QR of the centred training rows (modified Gram-Schmidt,
/// reorthogonalised). Accurate to about cond(X) eps rather than cond(C) eps.
CovarianceFactor factor_centered(const Matrix& centered);

/// Phase-one statistics of the Hotelling chart.
class HotellingBaseline {
public:
    /// Factors covariance + ridge I with a pivoted LDL^T.
    HotellingBaseline(Vector mean, Eigen::MatrixXd covariance, double t2_mean, double t2_std,
                      double ridge = 0.0);
    /// Uses a given factor of the covariance (ridge 0).
    HotellingBaseline(Vector mean, Eigen::MatrixXd covariance, CovarianceFactor factor, double t2_mean,
                      double t2_std);

    const Vector& mean() const noexcept { return mean_; }
    const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
    const Eigen::MatrixXd& covariance_inverse() const noexcept { return inverse_; }
    double t2_mean() const noexcept { return t2_mean_; }
    double t2_std() const noexcept { return t2_std_; }
    double ucl() const noexcept { return t2_mean_ + 3.0 * t2_std_; }
    double lcl() const noexcept;
    double ridge() const noexcept { return ridge_; }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(mean_.size()); }

    const CovarianceFactor& factor() const noexcept { return factor_; }

    /// (r - mu) C^-1 (r - mu)^T = sum z_i^2 / D_i with z = L^-1 P (r - mu).
    double t2(const Eigen::Ref<const RowVector>& pattern) const;

private:
    void finish();

    Vector mean_;
    Eigen::MatrixXd covariance_;
    Eigen::MatrixXd inverse_;
    CovarianceFactor factor_;
    double t2_mean_;
    double t2_std_;
    double ridge_;
};

/// Sample mean, covariance with the 1/(N-1) convention and 3-sigma limits
/// of the training t^2 values (population standard deviation). Without a
/// ridge, t^2 goes through factor_centered of the training rows.
/// Throws SingularCovariance when the condition number exceeds 1e12.
HotellingBaseline fit_hotelling(const Matrix& train, HotellingOptions options = {});

struct T2Point {
    Timestamp timestamp = 0;
    double t2 = kNaN;
    ChartStatus status = ChartStatus::NoData;
};

/// Phase-two chart for one stream. Only exceeding the UCL is out of control.
class T2Monitor {
public:
    struct Step {
        T2Point point;
        PersistenceMachine::Transition transition = PersistenceMachine::Transition::None;
        std::optional<std::size_t> active_event;
    };

    T2Monitor(const HotellingBaseline& baseline, PersistenceConfig persistence = {});

    /// Patterns with any missing component are no-data.
    Step step(Timestamp timestamp, const Eigen::Ref<const RowVector>& pattern);

    const std::vector<WarningEvent>& events() const noexcept { return events_; }

private:
    const HotellingBaseline& baseline_;
    PersistenceMachine machine_;
    std::vector<WarningEvent> events_;
    std::size_t index_ = 0;
    double run_max_ = 0.0;
    Timestamp run_max_time_ = 0;
    std::size_t run_max_index_ = 0;
    bool run_started_ = false;
};

}  // namespace somcm
