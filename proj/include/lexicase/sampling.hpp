#ifndef LEXICASE_SAMPLING_HPP
#define LEXICASE_SAMPLING_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Core>

#include "lexicase/core.hpp"

namespace lexicase {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Pass/fail table of a parent sample (rows) over the full case set (columns).
class SolveMatrix {
public:
    explicit SolveMatrix(BoolMatrix solved);

    // solved(p, c) = errors(p, c) <= threshold.
    static auto from_errors(Matrix const& errors, double threshold) -> SolveMatrix;

    [[nodiscard]] auto n_rows() const noexcept -> Index { return static_cast<Index>(solved_.rows()); }
    [[nodiscard]] auto n_cases() const noexcept -> Index { return static_cast<Index>(solved_.cols()); }
    [[nodiscard]] auto solved(Index row, Index test_case) const -> bool
    {
        return solved_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(test_case));
    }
    [[nodiscard]] auto values() const noexcept -> BoolMatrix const& { return solved_; }

private:
    BoolMatrix solved_;
};

// max(1, round-half-up(rate * n)).
auto sample_size(double rate, Index n) -> Index;

// Uniform k-subset of {0, ..., n-1}, sorted ascending.
auto uniform_subset(Index n, Index k, RandomSource& rng) -> CaseSet;

// Uniform subset of size sample_size(rate, n_cases), sorted ascending.
auto random_downsample(Index n_cases, double rate, RandomSource& rng) -> CaseSet;

// Fraction of sampled parents whose pass/fail differs between cases a and b.
auto case_distance(SolveMatrix const& solves, Index a, Index b) -> double;

// All pairwise case distances.
auto case_distances(SolveMatrix const& solves) -> Matrix;

// Farthest-first traversal from a uniformly drawn start case. Cases are returned
// in the order they were picked.
auto informed_downsample(SolveMatrix const& solves, Index size, RandomSource& rng) -> CaseSet;

// Same construction from a given start case.
auto farthest_first(SolveMatrix const& solves, Index size, Index start, RandomSource& rng) -> CaseSet;

enum class DownsampleMode { full, random, informed };

auto downsample_mode_name(DownsampleMode mode) -> std::string_view;
auto parse_downsample_mode(std::string_view name) -> DownsampleMode;

struct DownsampleSchedule {
    DownsampleMode mode = DownsampleMode::full;
    double ds_rate = 1.0;
    double parent_rate = 1.0;
    Index generational_interval = 1;
    double solve_threshold = 0.0;

    void validate() const;
};

// Evaluation counts charged to one generation.
struct CostRecord {
    Index population_evaluations = 0; // n_individuals x |active cases|
    Index estimation_evaluations = 0; // sampled parents x n_cases, informed rebuilds only
    Index parents_sampled = 0;
    bool rebuilt = false;

    [[nodiscard]] auto total() const noexcept -> Index { return population_evaluations + estimation_evaluations; }
};

struct ScheduleStep {
    CaseSet active_cases;
    CostRecord cost;
};

// Errors of the given population members on every training case (rows follow `members`).
using FullEvaluator = std::function<Matrix(std::span<Index const> members)>;

/// Stateful driver for one run's downsampling schedule. Informed mode keeps
/// its sample between estimation generations.
class Downsampler {
public:
    explicit Downsampler(DownsampleSchedule schedule);

    auto step(Index generation, Index n_individuals, Index n_cases, FullEvaluator const& evaluate_full, RandomSource& rng)
        -> ScheduleStep;

    [[nodiscard]] auto schedule() const noexcept -> DownsampleSchedule const& { return schedule_; }
    [[nodiscard]] auto solve_matrix() const noexcept -> std::optional<SolveMatrix> const& { return solves_; }

private:
    DownsampleSchedule schedule_;
    CaseSet sample_;
    std::optional<SolveMatrix> solves_;
};

} // namespace lexicase

#endif
