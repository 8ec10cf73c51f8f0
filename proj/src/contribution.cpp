#include "somcm/contribution.hpp"

#include <algorithm>
#include <cmath>

#include "somcm/error.hpp"

namespace somcm {

namespace {

RowVector weighted_offset(const SomModel& model, const Eigen::Ref<const RowVector>& pattern,
                          std::size_t winner) {
    const Matrix& cb = model.codebook();
    const Matrix& w = model.weights().matrix();
    const auto c = static_cast<Eigen::Index>(winner);
    RowVector d = RowVector::Zero(cb.cols());
    for (Eigen::Index i = 0; i < cb.rows(); ++i) {
        d += w(c, i) * (pattern - cb.row(i));
    }
    return d / static_cast<double>(cb.rows());
}

}  // namespace

RowVector distance_vector(const SomModel& model, const Eigen::Ref<const RowVector>& pattern) {
    return weighted_offset(model, pattern, bmu(model, pattern).cell);
}

RowVector distance_vector(const SomModel& model, const Eigen::Ref<const RowVector>& pattern,
                          const PresenceMask& mask) {
    if (mask.complete()) {
        return distance_vector(model, pattern);
    }
    const std::size_t winner = bmu(model, pattern, mask).cell;
    RowVector filled = pattern;
    for (Eigen::Index j = 0; j < filled.size(); ++j) {
        if (!mask.present[static_cast<std::size_t>(j)]) {
            filled(j) = 0.0;
        }
    }
    RowVector d = weighted_offset(model, filled, winner);
    for (Eigen::Index j = 0; j < d.size(); ++j) {
        if (!mask.present[static_cast<std::size_t>(j)]) {
            d(j) = 0.0;
        }
    }
    return d;
}

ContributionVector normalized_squared(const Eigen::Ref<const RowVector>& d) {
    const double norm2 = d.squaredNorm();
    require(norm2 > 0.0 && std::isfinite(norm2), ErrorKind::DegenerateInput,
            "cannot normalise a zero distance vector");
    return {d.array().square().matrix() / norm2, false};
}

namespace {

ContributionVector or_neutral(const RowVector& d) {
    if (d.squaredNorm() > 0.0) {
        return normalized_squared(d);
    }
    const auto n = d.size();
    return {RowVector::Constant(n, 1.0 / static_cast<double>(n)), true};
}

}  // namespace

ContributionVector contribution(const SomModel& model, const Eigen::Ref<const RowVector>& pattern) {
    return or_neutral(distance_vector(model, pattern));
}

ContributionVector contribution(const SomModel& model, const Eigen::Ref<const RowVector>& pattern,
                                const PresenceMask& mask) {
    return or_neutral(distance_vector(model, pattern, mask));
}

RowVector baseline_contribution(const SomModel& model, const Matrix& data) {
    require(data.rows() >= 1, ErrorKind::InvalidInput, "baseline contribution of an empty data set");
    RowVector total = RowVector::Zero(data.cols());
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        total += contribution(model, data.row(r)).values;
    }
    return total / static_cast<double>(data.rows());
}

ContributionRatios contribution_ratios(const Eigen::Ref<const RowVector>& baseline,
                                       const Eigen::Ref<const RowVector>& pattern_contribution,
                                       double threshold, double floor) {
    require(baseline.size() == pattern_contribution.size(), ErrorKind::ContractViolation,
            "contribution vectors differ in dimension");
    require(threshold > 0.0, ErrorKind::ContractViolation, "contribution threshold must be positive");
    ContributionRatios out;
    out.ratios.resize(baseline.size());
    for (Eigen::Index j = 0; j < baseline.size(); ++j) {
        out.ratios(j) = pattern_contribution(j) / std::max(baseline(j), floor);
        if (out.ratios(j) > threshold) {
            out.flagged.push_back(static_cast<std::size_t>(j));
        }
    }
    return out;
}

}  // namespace somcm
