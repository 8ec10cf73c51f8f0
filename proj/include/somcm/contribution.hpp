#pragma once

#include <cstddef>
#include <vector>

#include "somcm/som.hpp"
#include "somcm/types.hpp"

namespace somcm {

inline constexpr double kDefaultContributionThreshold = 1.3;
inline constexpr double kContributionFloor = 1e-6;

/// d(r) = (1/D) sum_i w_ci (r - m_i), signed. Missing components are zero.
RowVector distance_vector(const SomModel& model, const Eigen::Ref<const RowVector>& pattern);
RowVector distance_vector(const SomModel& model, const Eigen::Ref<const RowVector>& pattern,
                          const PresenceMask& mask);

/// Squared components of d scaled to unit sum. `neutral` marks the uniform
/// substitute used when d is the zero vector.
struct ContributionVector {
    RowVector values;
    bool neutral = false;
};

/// (d o d) / ||d||^2. Throws DegenerateInput for the zero vector.
ContributionVector normalized_squared(const Eigen::Ref<const RowVector>& d);

/// normalized_squared(distance_vector(...)), falling back to 1/n per variable
/// when the distance vector vanishes.
ContributionVector contribution(const SomModel& model, const Eigen::Ref<const RowVector>& pattern);
ContributionVector contribution(const SomModel& model, const Eigen::Ref<const RowVector>& pattern,
                                const PresenceMask& mask);

/// d_n(Delta): mean contribution vector over the training rows.
RowVector baseline_contribution(const SomModel& model, const Matrix& data);

struct ContributionRatios {
    RowVector ratios;
    std::vector<std::size_t> flagged;  // ascending variable index, ratio > threshold
};

/// cr_i = d_n(r)_i / max(d_n(Delta)_i, floor).
ContributionRatios contribution_ratios(const Eigen::Ref<const RowVector>& baseline,
                                       const Eigen::Ref<const RowVector>& pattern_contribution,
                                       double threshold = kDefaultContributionThreshold,
                                       double floor = kContributionFloor);

}  // namespace somcm
