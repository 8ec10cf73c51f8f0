#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "somcm/types.hpp"

namespace somcm {

/// Rectangular grid of SOM cells. Cell index i maps to (i / cols, i % cols);
/// the grid metric is the Euclidean distance between those integer coordinates.
struct GridTopology {
    std::size_t rows = 1;
    std::size_t cols = 1;

    GridTopology() = default;
    GridTopology(std::size_t rows, std::size_t cols);

    std::size_t cells() const noexcept { return rows * cols; }
    double distance_squared(std::size_t c, std::size_t i) const noexcept;
    double distance(std::size_t c, std::size_t i) const noexcept;

    /// Smallest near-square grid (rows <= cols <= rows + 1) holding at least
    /// 5*sqrt(N) cells, capped at 400 cells and never exceeding N cells.
    static GridTopology default_for(std::size_t observations);

    bool operator==(const GridTopology&) const = default;
};

/// Gaussian neighbourhood w_ci = exp(-d(c,i)^2 / (2 sigma^2)) for every pair of cells.
class NeighborhoodWeights {
public:
    NeighborhoodWeights(const GridTopology& grid, double sigma);

    double operator()(std::size_t c, std::size_t i) const noexcept { return w_(c, i); }
    const Matrix& matrix() const noexcept { return w_; }

private:
    Matrix w_;
};

struct TrainingMeta {
    std::size_t epochs = 0;
    double final_distortion = 0.0;
    std::string data_fingerprint;
    std::size_t rows_used = 0;
    bool random_init = false;
};

/// Trained codebook. Immutable once built; all queries are const and thread-safe.
class SomModel {
public:
    SomModel(GridTopology grid, Matrix codebook, double sigma, TrainingMeta meta = {});

    const GridTopology& topology() const noexcept { return grid_; }
    const Matrix& codebook() const noexcept { return codebook_; }
    double sigma() const noexcept { return sigma_; }
    const TrainingMeta& meta() const noexcept { return meta_; }
    const NeighborhoodWeights& weights() const noexcept { return weights_; }

    std::size_t cells() const noexcept { return grid_.cells(); }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(codebook_.cols()); }

private:
    GridTopology grid_;
    Matrix codebook_;
    double sigma_;
    TrainingMeta meta_;
    NeighborhoodWeights weights_;
};

/// Per-pattern missing-value handling: distances are taken over present
/// components and rescaled by n / present.
struct PresenceMask {
    std::vector<bool> present;
    std::size_t present_count = 0;

    static PresenceMask from_pattern(const Eigen::Ref<const RowVector>& pattern);
    bool complete() const noexcept { return present_count == present.size(); }
};

struct BmuResult {
    std::size_t cell = 0;
    double distance = 0.0;
};

/// Best matching unit: argmin_i ||pattern - m_i||, ties to the lowest index.
BmuResult bmu(const SomModel& model, const Eigen::Ref<const RowVector>& pattern);
BmuResult bmu(const SomModel& model, const Eigen::Ref<const RowVector>& pattern,
              const PresenceMask& mask);

/// DM(r) = sum_i w_ci ||r - m_i|| with c = bmu(r).
double distortion_single(const SomModel& model, const Eigen::Ref<const RowVector>& pattern);
double distortion_single(const SomModel& model, const Eigen::Ref<const RowVector>& pattern,
                         const PresenceMask& mask);

/// Mean of distortion_single over the rows of data (DM_delta for the training set).
double distortion_average(const SomModel& model, const Matrix& data);

struct TrainConfig {
    std::size_t rows = 0;          // 0 with cols = 0: pick GridTopology::default_for(N)
    std::size_t cols = 0;
    std::size_t epochs = 30;
    std::optional<double> sigma_initial;  // default max(rows, cols) / 2
    double sigma_final = 0.8;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
};

/// Neighbourhood width used in epoch e (0-based): linear from sigma_initial to sigma_final.
double sigma_for_epoch(double sigma_initial, double sigma_final, std::size_t epoch,
                       std::size_t epochs);

/// Codebook initialisation along the two leading principal components; falls
/// back to a seeded random draw of data rows when the covariance is degenerate.
Matrix initial_codebook(const GridTopology& grid, const Matrix& data, std::uint64_t seed,
                        bool* used_random = nullptr);

/// One batch update at a given sigma: assign every row to its BMU, then move
/// each m_i to the neighbourhood-weighted mean of all rows. Cells with zero
/// accumulated weight keep their previous vector.
Matrix batch_epoch(const GridTopology& grid, const Matrix& codebook, const Matrix& data,
                   double sigma, std::size_t threads = 1);

/// Result of one safeguarded epoch at fixed sigma.
struct EpochStep {
    Matrix codebook;
    double distortion_before = 0.0;  // DM average of the incoming codebook
    double distortion = 0.0;         // DM average of the returned codebook
    double step = 0.0;               // fraction of the batch move taken; 0 = rejected
};

inline constexpr int kMaxBacktracks = 3;

/// Batch epoch used by train_batch. The batch proposal is taken when it does
/// not increase the distortion measure at this sigma; otherwise the move is
/// halved up to kMaxBacktracks times, and the codebook is kept unchanged if
/// no fraction improves. distortion <= distortion_before always holds.
EpochStep descent_epoch(const GridTopology& grid, const Matrix& codebook, const Matrix& data,
                        double sigma, std::size_t threads = 1);

/// Observer invoked after every epoch with (epoch index, sigma, codebook).
using EpochObserver = std::function<void(std::size_t epoch, double sigma, const Matrix&)>;

SomModel train_batch(const Matrix& data, const TrainConfig& config,
                     const EpochObserver& observer = {});

/// FNV-1a over the raw bytes of the matrix and its shape, as 16 hex digits.
std::string fingerprint(const Matrix& data);

}  // namespace somcm
