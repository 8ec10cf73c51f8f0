#include "somcm/som.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <thread>

#include <Eigen/Eigenvalues>

#include "somcm/error.hpp"
#include "somcm/rng.hpp"

namespace somcm {

namespace {

// Rows per accumulation chunk; the reduction order is independent of the thread count.
constexpr Eigen::Index kChunkRows = 2048;

void require_finite(const Eigen::Ref<const RowVector>& pattern) {
    require(pattern.allFinite(), ErrorKind::InvalidInput, "pattern contains non-finite entries");
}

void require_dimension(const SomModel& model, Eigen::Index n) {
    require(static_cast<std::size_t>(n) == model.dimension(), ErrorKind::ContractViolation,
            "pattern dimension " + std::to_string(n) + " does not match model dimension " +
                std::to_string(model.dimension()));
}

inline double squared_distance(const double* a, const double* b, Eigen::Index n) noexcept {
    using Map = Eigen::Map<const Eigen::VectorXd>;
    return (Map(a, n) - Map(b, n)).squaredNorm();
}

BmuResult nearest(const Matrix& codebook, const Eigen::Ref<const RowVector>& pattern) {
    BmuResult best{0, std::numeric_limits<double>::infinity()};
    const RowVector p = pattern;
    const Eigen::Index n = codebook.cols();
    for (Eigen::Index i = 0; i < codebook.rows(); ++i) {
        const double d2 = squared_distance(codebook.data() + i * n, p.data(), n);
        if (d2 < best.distance) {
            best.cell = static_cast<std::size_t>(i);
            best.distance = d2;
        }
    }
    best.distance = std::sqrt(best.distance);
    return best;
}

struct ChunkSums {
    Matrix sums;
    Vector counts;
    double distortion = 0.0;
    double distortion_next = 0.0;
};

// One pass over rows [begin, end): BMU assignment, per-cell sums and the
// summed single-pattern distortion under weights `w` (and `w_next` if set).
void accumulate_chunk(const Matrix& codebook, const Matrix& w, const Matrix* w_next,
                      const Matrix& data, Eigen::Index begin, Eigen::Index end, bool want_sums,
                      ChunkSums& out) {
    const Eigen::Index cells = codebook.rows();
    const Eigen::Index n = codebook.cols();
    if (want_sums) {
        out.sums = Matrix::Zero(cells, n);
        out.counts = Vector::Zero(cells);
    }
    out.distortion = 0.0;
    out.distortion_next = 0.0;
    std::vector<double> dist(static_cast<std::size_t>(cells));
    for (Eigen::Index r = begin; r < end; ++r) {
        const double* x = data.data() + r * n;
        Eigen::Index c = 0;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < cells; ++i) {
            const double v = squared_distance(codebook.data() + i * n, x, n);
            dist[static_cast<std::size_t>(i)] = v;
            if (v < best) {
                best = v;
                c = i;
            }
        }
        Eigen::Map<Eigen::ArrayXd> root(dist.data(), cells);
        root = root.sqrt();
        const double* wc = w.data() + c * cells;
        double dm = 0.0;
        for (Eigen::Index i = 0; i < cells; ++i) {
            dm += wc[i] * dist[static_cast<std::size_t>(i)];
        }
        out.distortion += dm;
        if (w_next != nullptr) {
            const double* wn = w_next->data() + c * cells;
            double next = 0.0;
            for (Eigen::Index i = 0; i < cells; ++i) {
                next += wn[i] * dist[static_cast<std::size_t>(i)];
            }
            out.distortion_next += next;
        }
        if (want_sums) {
            double* s = out.sums.data() + c * n;
            for (Eigen::Index j = 0; j < n; ++j) {
                s[j] += x[j];
            }
            out.counts(c) += 1.0;
        }
    }
}

struct PassResult {
    Matrix sums;
    Vector counts;
    double distortion = 0.0;       // averaged over rows
    double distortion_next = 0.0;  // same, under the next epoch's weights
};

PassResult chunked_pass(const Matrix& codebook, const Matrix& w, const Matrix* w_next,
                        const Matrix& data, bool want_sums, std::size_t threads) {
    const Eigen::Index rows = data.rows();
    const Eigen::Index chunks = (rows + kChunkRows - 1) / kChunkRows;
    std::vector<ChunkSums> partial(static_cast<std::size_t>(chunks));
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(threads, partial.size()));
    auto run = [&](std::size_t worker) {
        for (std::size_t k = worker; k < partial.size(); k += workers) {
            const auto begin = static_cast<Eigen::Index>(k) * kChunkRows;
            accumulate_chunk(codebook, w, w_next, data, begin, std::min(rows, begin + kChunkRows),
                             want_sums, partial[k]);
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back(run, t);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    PassResult out;
    if (want_sums) {
        out.sums = Matrix::Zero(codebook.rows(), codebook.cols());
        out.counts = Vector::Zero(codebook.rows());
    }
    for (const auto& p : partial) {
        if (want_sums) {
            out.sums += p.sums;
            out.counts += p.counts;
        }
        out.distortion += p.distortion;
        out.distortion_next += p.distortion_next;
    }
    out.distortion /= static_cast<double>(rows);
    out.distortion_next /= static_cast<double>(rows);
    return out;
}

Matrix weighted_means(const Matrix& codebook, const Matrix& w, const Matrix& sums,
                      const Vector& counts) {
    Matrix updated = codebook;
    for (Eigen::Index i = 0; i < codebook.rows(); ++i) {
        double denom = 0.0;
        RowVector numer = RowVector::Zero(codebook.cols());
        for (Eigen::Index c = 0; c < codebook.rows(); ++c) {
            if (counts(c) > 0.0) {
                denom += w(c, i) * counts(c);
                numer += w(c, i) * sums.row(c);
            }
        }
        if (denom > 0.0) {
            updated.row(i) = numer / denom;
        }
    }
    return updated;
}

}  // namespace

GridTopology::GridTopology(std::size_t rows_, std::size_t cols_) : rows(rows_), cols(cols_) {
    require(rows >= 1 && cols >= 1, ErrorKind::ContractViolation,
            "grid dimensions must be positive");
}

double GridTopology::distance_squared(std::size_t c, std::size_t i) const noexcept {
    const double dr = static_cast<double>(c / cols) - static_cast<double>(i / cols);
    const double dc = static_cast<double>(c % cols) - static_cast<double>(i % cols);
    return dr * dr + dc * dc;
}

double GridTopology::distance(std::size_t c, std::size_t i) const noexcept {
    return std::sqrt(distance_squared(c, i));
}

GridTopology GridTopology::default_for(std::size_t observations) {
    require(observations >= 1, ErrorKind::InsufficientData, "cannot size a grid for zero rows");
    const double wanted = std::min(400.0, std::ceil(5.0 * std::sqrt(static_cast<double>(observations))));
    const auto target = static_cast<std::size_t>(std::min<double>(wanted, static_cast<double>(observations)));
    std::size_t side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(target))));
    std::size_t rows = side;
    std::size_t cols = side;
    if (side > 1 && (side - 1) * side >= target) {
        rows = side - 1;
    }
    // Never ask for more cells than observations.
    while (rows * cols > observations) {
        if (cols > rows) {
            --cols;
        } else {
            --rows;
        }
    }
    return GridTopology(std::max<std::size_t>(rows, 1), std::max<std::size_t>(cols, 1));
}

NeighborhoodWeights::NeighborhoodWeights(const GridTopology& grid, double sigma) {
    require(sigma > 0.0 && std::isfinite(sigma), ErrorKind::ContractViolation,
            "neighbourhood width must be positive");
    const auto d = static_cast<Eigen::Index>(grid.cells());
    w_.resize(d, d);
    const double denom = 2.0 * sigma * sigma;
    for (Eigen::Index c = 0; c < d; ++c) {
        for (Eigen::Index i = 0; i < d; ++i) {
            w_(c, i) = c == i ? 1.0
                              : std::exp(-grid.distance_squared(static_cast<std::size_t>(c),
                                                                static_cast<std::size_t>(i)) /
                                         denom);
        }
    }
}

SomModel::SomModel(GridTopology grid, Matrix codebook, double sigma, TrainingMeta meta)
    : grid_(grid),
      codebook_(std::move(codebook)),
      sigma_(sigma),
      meta_(std::move(meta)),
      weights_(grid_, sigma) {
    require(static_cast<std::size_t>(codebook_.rows()) == grid_.cells(),
            ErrorKind::ContractViolation, "codebook row count must equal the number of cells");
    require(codebook_.cols() >= 1, ErrorKind::ContractViolation, "codebook dimension must be >= 1");
    require(codebook_.allFinite(), ErrorKind::InvalidInput, "codebook contains non-finite entries");
}

PresenceMask PresenceMask::from_pattern(const Eigen::Ref<const RowVector>& pattern) {
    PresenceMask mask;
    mask.present.resize(static_cast<std::size_t>(pattern.size()));
    for (Eigen::Index j = 0; j < pattern.size(); ++j) {
        const bool ok = std::isfinite(pattern(j));
        mask.present[static_cast<std::size_t>(j)] = ok;
        mask.present_count += ok ? 1 : 0;
    }
    return mask;
}

BmuResult bmu(const SomModel& model, const Eigen::Ref<const RowVector>& pattern) {
    require_dimension(model, pattern.size());
    require_finite(pattern);
    return nearest(model.codebook(), pattern);
}

namespace {

double masked_distance_squared(const Eigen::Ref<const RowVector>& a,
                               const Eigen::Ref<const RowVector>& b, const PresenceMask& mask) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
        if (mask.present[static_cast<std::size_t>(j)]) {
            const double diff = a(j) - b(j);
            sum += diff * diff;
        }
    }
    return sum * static_cast<double>(mask.present.size()) /
           static_cast<double>(mask.present_count);
}

}  // namespace

BmuResult bmu(const SomModel& model, const Eigen::Ref<const RowVector>& pattern,
              const PresenceMask& mask) {
    require_dimension(model, pattern.size());
    require(mask.present.size() == static_cast<std::size_t>(pattern.size()),
            ErrorKind::ContractViolation, "presence mask does not match pattern");
    if (mask.complete()) {
        return bmu(model, pattern);
    }
    require(mask.present_count > 0, ErrorKind::InvalidInput, "pattern has no present variables");
    const Matrix& cb = model.codebook();
    BmuResult best{0, std::numeric_limits<double>::infinity()};
    for (Eigen::Index i = 0; i < cb.rows(); ++i) {
        const double d2 = masked_distance_squared(pattern, cb.row(i), mask);
        if (d2 < best.distance) {
            best = {static_cast<std::size_t>(i), d2};
        }
    }
    best.distance = std::sqrt(best.distance);
    return best;
}

double distortion_single(const SomModel& model, const Eigen::Ref<const RowVector>& pattern) {
    const BmuResult winner = bmu(model, pattern);
    const Matrix& cb = model.codebook();
    const auto c = static_cast<Eigen::Index>(winner.cell);
    const Matrix& w = model.weights().matrix();
    const RowVector p = pattern;
    const Eigen::Index n = cb.cols();
    double total = 0.0;
    for (Eigen::Index i = 0; i < cb.rows(); ++i) {
        total += w(c, i) * std::sqrt(squared_distance(cb.data() + i * n, p.data(), n));
    }
    return total;
}

double distortion_single(const SomModel& model, const Eigen::Ref<const RowVector>& pattern,
                         const PresenceMask& mask) {
    if (mask.complete()) {
        return distortion_single(model, pattern);
    }
    const BmuResult winner = bmu(model, pattern, mask);
    const Matrix& cb = model.codebook();
    const auto c = static_cast<Eigen::Index>(winner.cell);
    const Matrix& w = model.weights().matrix();
    double total = 0.0;
    for (Eigen::Index i = 0; i < cb.rows(); ++i) {
        total += w(c, i) * std::sqrt(masked_distance_squared(pattern, cb.row(i), mask));
    }
    return total;
}

double distortion_average(const SomModel& model, const Matrix& data) {
    require(data.rows() >= 1, ErrorKind::InvalidInput, "distortion average of an empty data set");
    double total = 0.0;
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        total += distortion_single(model, data.row(r));
    }
    return total / static_cast<double>(data.rows());
}

double sigma_for_epoch(double sigma_initial, double sigma_final, std::size_t epoch,
                       std::size_t epochs) {
    if (epochs <= 1) {
        return sigma_final;
    }
    const double t = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
    return sigma_initial + (sigma_final - sigma_initial) * t;
}

Matrix initial_codebook(const GridTopology& grid, const Matrix& data, std::uint64_t seed,
                        bool* used_random) {
    const Eigen::Index d = static_cast<Eigen::Index>(grid.cells());
    const Eigen::Index n = data.cols();
    const RowVector mean = data.colwise().mean();
    if (used_random != nullptr) {
        *used_random = false;
    }
    if (d == 1) {
        return mean;
    }

    const bool two_axes = grid.rows > 1 && grid.cols > 1;
    bool degenerate = data.rows() < 2;
    Eigen::VectorXd values;
    Matrix vectors;
    if (!degenerate) {
        const Matrix centered = data.rowwise() - mean;
        const Eigen::MatrixXd cov =
            (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        values = solver.eigenvalues().reverse();
        vectors = solver.eigenvectors().rowwise().reverse();
        const double lead = values(0);
        degenerate = !(lead > 1e-12) || !std::isfinite(lead) ||
                     (two_axes && (n < 2 || !(values(1) > 1e-10 * lead)));
    }

    Matrix codebook(d, n);
    if (degenerate) {
        Rng rng(seed, 0x534f4d);  // "SOM"
        std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
        for (std::size_t k = 0; k < order.size(); ++k) {
            order[k] = static_cast<Eigen::Index>(k);
        }
        for (Eigen::Index i = 0; i < d; ++i) {
            const auto remaining = static_cast<std::uint64_t>(order.size()) - static_cast<std::uint64_t>(i);
            const auto pick = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.below(remaining));
            std::swap(order[static_cast<std::size_t>(i)], order[pick]);
            codebook.row(i) = data.row(order[static_cast<std::size_t>(i)]);
        }
        if (used_random != nullptr) {
            *used_random = true;
        }
        return codebook;
    }

    // Fix each eigenvector's sign so its largest-magnitude entry is positive.
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(2, vectors.cols()); ++k) {
        Eigen::Index arg = 0;
        vectors.col(k).cwiseAbs().maxCoeff(&arg);
        if (vectors(arg, k) < 0.0) {
            vectors.col(k) *= -1.0;
        }
    }

    // The longer grid side spans the leading component.
    const bool cols_major = grid.cols >= grid.rows;
    const std::size_t major = cols_major ? grid.cols : grid.rows;
    const std::size_t minor = cols_major ? grid.rows : grid.cols;
    const RowVector axis1 = std::sqrt(values(0)) * vectors.col(0).transpose();
    const RowVector axis2 =
        (two_axes ? std::sqrt(values(1)) : 0.0) * vectors.col(std::min<Eigen::Index>(1, n - 1)).transpose();
    auto spread = [](std::size_t k, std::size_t count) {
        return count > 1 ? 2.0 * static_cast<double>(k) / static_cast<double>(count - 1) - 1.0 : 0.0;
    };
    for (Eigen::Index i = 0; i < d; ++i) {
        const std::size_t r = static_cast<std::size_t>(i) / grid.cols;
        const std::size_t c = static_cast<std::size_t>(i) % grid.cols;
        const std::size_t a = cols_major ? c : r;
        const std::size_t b = cols_major ? r : c;
        codebook.row(i) = mean + spread(a, major) * axis1 + spread(b, minor) * axis2;
    }
    return codebook;
}

Matrix batch_epoch(const GridTopology& grid, const Matrix& codebook, const Matrix& data,
                   double sigma, std::size_t threads) {
    const NeighborhoodWeights weights(grid, sigma);
    const PassResult pass = chunked_pass(codebook, weights.matrix(), nullptr, data, true, threads);
    return weighted_means(codebook, weights.matrix(), pass.sums, pass.counts);
}

namespace {

// Tries the batch proposal, then halved steps toward it. `current` holds
// the sums and distortion of `codebook` under `w`; on return it holds the
// same for the kept codebook under `w_next` (when given).
EpochStep safeguarded_step(const Matrix& codebook, const Matrix& w, const Matrix* w_next,
                           const Matrix& data, std::size_t threads, PassResult& current) {
    const Matrix proposal = weighted_means(codebook, w, current.sums, current.counts);
    EpochStep step{codebook, current.distortion, current.distortion, 0.0};
    double fraction = 1.0;
    for (int attempt = 0; attempt <= kMaxBacktracks; ++attempt, fraction *= 0.5) {
        Matrix candidate = attempt == 0 ? proposal : Matrix(codebook + fraction * (proposal - codebook));
        PassResult trial = chunked_pass(candidate, w, w_next, data, w_next != nullptr, threads);
        if (trial.distortion <= current.distortion) {
            step.codebook = std::move(candidate);
            step.distortion = trial.distortion;
            step.step = fraction;
            if (w_next != nullptr) {
                current = std::move(trial);
                current.distortion = current.distortion_next;
            }
            return step;
        }
    }
    if (w_next != nullptr) {
        current.distortion = chunked_pass(codebook, *w_next, nullptr, data, false, threads).distortion;
    }
    return step;
}

}  // namespace

EpochStep descent_epoch(const GridTopology& grid, const Matrix& codebook, const Matrix& data,
                        double sigma, std::size_t threads) {
    const NeighborhoodWeights weights(grid, sigma);
    PassResult current = chunked_pass(codebook, weights.matrix(), nullptr, data, true, threads);
    return safeguarded_step(codebook, weights.matrix(), nullptr, data, threads, current);
}

SomModel train_batch(const Matrix& data, const TrainConfig& config, const EpochObserver& observer) {
    require(data.rows() >= 1 && data.cols() >= 1, ErrorKind::InsufficientData,
            "training data is empty");
    require(data.allFinite(), ErrorKind::InvalidInput, "training data contains non-finite entries");
    require(config.epochs >= 1, ErrorKind::ContractViolation, "epochs must be >= 1");
    require(config.sigma_final > 0.0, ErrorKind::ContractViolation, "sigma_final must be positive");
    require((config.rows == 0) == (config.cols == 0), ErrorKind::ContractViolation,
            "grid rows and cols must both be set or both be zero");

    const GridTopology grid = config.rows == 0
                                  ? GridTopology::default_for(static_cast<std::size_t>(data.rows()))
                                  : GridTopology(config.rows, config.cols);
    require(static_cast<std::size_t>(data.rows()) >= grid.cells(), ErrorKind::InsufficientData,
            "need at least " + std::to_string(grid.cells()) + " observations for a " +
                std::to_string(grid.rows) + "x" + std::to_string(grid.cols) + " grid, got " +
                std::to_string(data.rows()));
    const double sigma0 =
        config.sigma_initial.value_or(static_cast<double>(std::max(grid.rows, grid.cols)) / 2.0);
    require(sigma0 > 0.0, ErrorKind::ContractViolation, "sigma_initial must be positive");

    bool random_init = false;
    Matrix codebook = initial_codebook(grid, data, config.seed, &random_init);
    auto sigma_at = [&](std::size_t e) {
        return sigma_for_epoch(sigma0, config.sigma_final, e, config.epochs);
    };
    auto weights = std::make_unique<NeighborhoodWeights>(grid, sigma_at(0));
    std::unique_ptr<NeighborhoodWeights> next;
    if (config.epochs > 1) {
        next = std::make_unique<NeighborhoodWeights>(grid, sigma_at(1));
    }
    PassResult current = chunked_pass(codebook, weights->matrix(), nullptr, data, true, config.threads);
    for (std::size_t e = 0; e < config.epochs; ++e) {
        const Matrix* w_next = next ? &next->matrix() : nullptr;
        codebook = safeguarded_step(codebook, weights->matrix(), w_next, data, config.threads, current)
                       .codebook;
        if (observer) {
            observer(e, sigma_at(e), codebook);
        }
        weights = std::move(next);
        if (e + 2 < config.epochs) {
            next = std::make_unique<NeighborhoodWeights>(grid, sigma_at(e + 2));
        }
    }

    TrainingMeta meta;
    meta.epochs = config.epochs;
    meta.data_fingerprint = fingerprint(data);
    meta.rows_used = static_cast<std::size_t>(data.rows());
    meta.random_init = random_init;
    SomModel provisional(grid, codebook, config.sigma_final, meta);
    meta.final_distortion = distortion_average(provisional, data);
    return SomModel(grid, std::move(codebook), config.sigma_final, std::move(meta));
}

std::string fingerprint(const Matrix& data) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    auto mix = [&hash](const void* bytes, std::size_t size) {
        const auto* p = static_cast<const unsigned char*>(bytes);
        for (std::size_t k = 0; k < size; ++k) {
            hash ^= p[k];
            hash *= 0x100000001b3ull;
        }
    };
    const std::int64_t shape[2] = {static_cast<std::int64_t>(data.rows()),
                                   static_cast<std::int64_t>(data.cols())};
    mix(shape, sizeof(shape));
    mix(data.data(), static_cast<std::size_t>(data.size()) * sizeof(double));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace somcm
