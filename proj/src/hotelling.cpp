#include "somcm/hotelling.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "somcm/error.hpp"

namespace somcm {

namespace {

// Names the variables loading on the weakest covariance direction.
std::string collinear_variables(const Eigen::MatrixXd& covariance) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
    const Eigen::VectorXd weakest = solver.eigenvectors().col(0);
    const double top = weakest.cwiseAbs().maxCoeff();
    std::ostringstream out;
    bool first = true;
    for (Eigen::Index j = 0; j < weakest.size(); ++j) {
        if (std::abs(weakest(j)) >= 0.1 * top) {
            out << (first ? "" : ", ") << j;
            first = false;
        }
    }
    return out.str();
}

void guard_condition(const Eigen::MatrixXd& covariance) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance, Eigen::EigenvaluesOnly);
    const double lo = solver.eigenvalues()(0);
    const double hi = solver.eigenvalues()(solver.eigenvalues().size() - 1);
    if (!(lo > 0.0) || !(hi / lo <= kMaxCovarianceCondition)) {
        std::ostringstream msg;
        msg << "covariance is singular or ill-conditioned (eigenvalues " << lo << " .. " << hi
            << "); near-collinear variable indices: " << collinear_variables(covariance);
        fail(ErrorKind::SingularCovariance, msg.str());
    }
}

}  // namespace

CovarianceFactor factor_centered(const Matrix& centered) {
    const auto rows = centered.rows();
    const auto n = centered.cols();
    Eigen::MatrixXd q = centered;
    Eigen::MatrixXd upper = Eigen::MatrixXd::Identity(n, n);
    Vector d(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index i = 0; i < k; ++i) {
                const double c = q.col(i).dot(q.col(k)) / d(i);
                q.col(k) -= c * q.col(i);
                upper(i, k) += c;
            }
        }
        d(k) = q.col(k).squaredNorm();
        require(d(k) > 0.0, ErrorKind::SingularCovariance, "training rows are linearly dependent");
    }
    CovarianceFactor f;
    f.permutation.setIdentity(n);
    f.lower = upper.transpose();
    f.diagonal = d / static_cast<double>(rows - 1);
    return f;
}

HotellingBaseline::HotellingBaseline(Vector mean, Eigen::MatrixXd covariance, double t2_mean,
                                     double t2_std, double ridge)
    : mean_(std::move(mean)),
      covariance_(std::move(covariance)),
      t2_mean_(t2_mean),
      t2_std_(t2_std),
      ridge_(ridge) {
    const auto n = mean_.size();
    require(n >= 1 && covariance_.rows() == n && covariance_.cols() == n,
            ErrorKind::ContractViolation, "covariance shape does not match the mean");
    require(ridge_ >= 0.0, ErrorKind::ContractViolation, "ridge must be non-negative");
    Eigen::MatrixXd regularized = covariance_;
    regularized.diagonal().array() += ridge_;
    guard_condition(regularized);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(regularized);
    require(ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all(),
            ErrorKind::SingularCovariance, "LDL^T factorisation of the covariance failed");
    factor_.permutation = ldlt.transpositionsP();
    factor_.lower = ldlt.matrixL();
    factor_.diagonal = ldlt.vectorD();
    finish();
}

HotellingBaseline::HotellingBaseline(Vector mean, Eigen::MatrixXd covariance, CovarianceFactor factor,
                                     double t2_mean, double t2_std)
    : mean_(std::move(mean)),
      covariance_(std::move(covariance)),
      factor_(std::move(factor)),
      t2_mean_(t2_mean),
      t2_std_(t2_std),
      ridge_(0.0) {
    const auto n = mean_.size();
    require(n >= 1 && covariance_.rows() == n && covariance_.cols() == n && factor_.lower.rows() == n &&
                factor_.lower.cols() == n && factor_.diagonal.size() == n && factor_.permutation.size() == n,
            ErrorKind::ContractViolation, "covariance factor shape does not match the mean");
    require((factor_.diagonal.array() > 0.0).all(), ErrorKind::SingularCovariance,
            "covariance factor has a non-positive pivot");
    guard_condition(covariance_);
    finish();
}

void HotellingBaseline::finish() {
    const auto n = mean_.size();
    const Eigen::MatrixXd l_inv =
        factor_.lower.triangularView<Eigen::UnitLower>().solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd scaled = factor_.diagonal.cwiseInverse().asDiagonal() * l_inv;
    inverse_ = factor_.permutation.transpose() * (l_inv.transpose() * scaled) * factor_.permutation;
}

double HotellingBaseline::lcl() const noexcept {
    return std::max(t2_mean_ - 3.0 * t2_std_, 0.0);
}

double HotellingBaseline::t2(const Eigen::Ref<const RowVector>& pattern) const {
    require(pattern.size() == mean_.size(), ErrorKind::ContractViolation,
            "pattern dimension does not match the Hotelling baseline");
    require(pattern.allFinite(), ErrorKind::InvalidInput, "pattern contains non-finite entries");
    const Vector centered = factor_.permutation * (pattern.transpose() - mean_);
    const Vector z = factor_.lower.triangularView<Eigen::UnitLower>().solve(centered);
    return (z.array().square() / factor_.diagonal.array()).sum();
}

HotellingBaseline fit_hotelling(const Matrix& train, HotellingOptions options) {
    const auto rows = train.rows();
    const auto n = train.cols();
    require(n >= 1 && rows >= n + 1, ErrorKind::InsufficientData,
            "Hotelling baseline needs at least n + 1 = " + std::to_string(n + 1) + " rows");
    require(train.allFinite(), ErrorKind::InvalidInput, "training data contains non-finite entries");

    const Vector mean = train.colwise().mean().transpose();
    const Matrix centered = train.rowwise() - mean.transpose();
    Eigen::MatrixXd covariance = (centered.transpose() * centered) / static_cast<double>(rows - 1);
    covariance = 0.5 * (covariance + covariance.transpose());

    // Factor first, then the training t^2 statistics.
    std::optional<CovarianceFactor> factor;
    if (options.ridge == 0.0) {
        guard_condition(covariance);
        factor = factor_centered(centered);
    }
    const auto build = [&](double t2_mean, double t2_std) {
        return factor ? HotellingBaseline(mean, covariance, *factor, t2_mean, t2_std)
                      : HotellingBaseline(mean, covariance, t2_mean, t2_std, options.ridge);
    };
    const HotellingBaseline provisional = build(0.0, 0.0);
    std::vector<double> values(static_cast<std::size_t>(rows));
    double total = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        values[static_cast<std::size_t>(r)] = provisional.t2(train.row(r));
        total += values[static_cast<std::size_t>(r)];
    }
    const double mu = total / static_cast<double>(rows);
    double var = 0.0;
    for (double v : values) {
        var += (v - mu) * (v - mu);
    }
    const double sd = std::sqrt(var / static_cast<double>(rows));
    return build(mu, sd);
}

T2Monitor::T2Monitor(const HotellingBaseline& baseline, PersistenceConfig persistence)
    : baseline_(baseline), machine_(persistence) {}

T2Monitor::Step T2Monitor::step(Timestamp timestamp, const Eigen::Ref<const RowVector>& pattern) {
    require(static_cast<std::size_t>(pattern.size()) == baseline_.dimension(),
            ErrorKind::ContractViolation, "pattern dimension does not match the Hotelling baseline");
    Step out;
    out.point.timestamp = timestamp;
    if (pattern.allFinite()) {
        out.point.t2 = baseline_.t2(pattern);
        out.point.status =
            out.point.t2 > baseline_.ucl() ? ChartStatus::OutOfControl : ChartStatus::InControl;
    }
    const bool was_active = machine_.active();
    out.transition = machine_.update(out.point.status);

    if (out.point.status == ChartStatus::NoData) {
        // leaves the run untouched
    } else if (out.point.status == ChartStatus::OutOfControl || was_active || machine_.active()) {
        if (!run_started_ || out.point.t2 > run_max_) {
            run_started_ = true;
            run_max_ = out.point.t2;
            run_max_time_ = timestamp;
            run_max_index_ = index_;
        }
    } else if (out.point.status == ChartStatus::InControl) {
        run_started_ = false;
    }

    if (out.transition == PersistenceMachine::Transition::Opened) {
        WarningEvent event;
        event.id = events_.size() + 1;
        event.detector = "hotelling-t2";
        event.start_time = timestamp;
        event.start_index = index_;
        events_.push_back(std::move(event));
    }
    if (!events_.empty() && (machine_.active() || out.transition == PersistenceMachine::Transition::Closed)) {
        WarningEvent& event = events_.back();
        event.extreme_value = run_max_;
        event.extreme_time = run_max_time_;
        event.extreme_index = run_max_index_;
        if (out.transition == PersistenceMachine::Transition::Closed) {
            event.end_time = timestamp;
            event.end_index = index_;
            run_started_ = false;
        }
        if (machine_.active()) {
            out.active_event = event.id;
        }
    }
    ++index_;
    return out;
}

}  // namespace somcm
