#ifndef LEXICASE_PROBABILITY_HPP
#define LEXICASE_PROBABILITY_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lexicase/core.hpp"
#include "lexicase/selectors.hpp"

namespace lexicase {

// Probability vector over population members; entries are nonnegative and sum to 1 (within 1e-9).
struct SelectionDistribution {
    std::vector<double> probs;

    SelectionDistribution() = default;
    explicit SelectionDistribution(std::vector<double> p);

    [[nodiscard]] auto size() const noexcept -> std::size_t { return probs.size(); }
    [[nodiscard]] auto operator[](std::size_t i) const noexcept -> double { return probs[i]; }
};

// Individuals grouped by identical error vectors over a case set, in order of first appearance.
struct BehaviorGroups {
    std::vector<Index> group_of;       // individual -> group
    std::vector<Index> representative; // group -> first individual
    std::vector<Index> multiplicity;   // group -> number of individuals

    [[nodiscard]] auto size() const noexcept -> std::size_t { return representative.size(); }
};

auto behavior_groups(ErrorMatrix const& matrix, std::span<Index const> cases) -> BehaviorGroups;

// Size limits of the exact oracle; beyond them it refuses unless overridden.
constexpr Index ExactGuardDistinctRows = 12;
constexpr Index ExactGuardCases = 10;
// Hard limit of the bitmask representation, even with the override.
constexpr Index ExactHardLimit = 64;

/// Exact lexicase (or epsilon-lexicase) selection probabilities.
///
/// Expands the average over all case orderings as a recursion over
/// (pool of distinct error vectors, remaining cases), memoized on both sets.
/// Cases that would not shrink the current pool are dropped before
/// branching; they stay neutral for every sub-pool. Cost is exponential,
/// hence the guard.
auto exact_distribution(ErrorMatrix const& matrix,
                        std::span<Index const> active_cases,
                        std::span<double const> epsilons = {},
                        bool override_guard = false) -> SelectionDistribution;

/// First-order direct approximation of lexicase probabilities.
///
/// Each distinct error vector scores the average, over active cases, of its
/// share of that case's elite set (elite over distinct vectors). Probabilities
/// are proportional to score^alpha, and a vector's mass is split evenly over
/// its duplicate individuals. Vectors elite on no case get exactly 0.
auto plexicase_distribution(ErrorMatrix const& matrix,
                            std::span<Index const> active_cases,
                            double alpha,
                            std::span<double const> epsilons = {}) -> SelectionDistribution;

// Monte-Carlo estimate: `trials` selection events on streams rng.derive(k).
auto empirical_distribution(ErrorMatrix const& matrix,
                            std::span<Index const> active_cases,
                            SelectorConfig const& config,
                            Index trials,
                            RandomSource const& rng,
                            unsigned jobs = 1) -> SelectionDistribution;

auto empirical_distribution(Index n_individuals,
                            Index trials,
                            RandomSource const& rng,
                            std::function<Index(RandomSource&)> const& selector) -> SelectionDistribution;

// Inverse-CDF draw.
auto sample_index(SelectionDistribution const& dist, RandomSource& rng) -> Index;

// Half the L1 distance; both distributions must have the same length.
auto total_variation(SelectionDistribution const& a, SelectionDistribution const& b) -> double;

// Exact law of tournament selection (with replacement, lowest mean error wins, uniform ties).
auto tournament_distribution(ErrorMatrix const& matrix, std::span<Index const> active_cases, Index tournament_size)
    -> SelectionDistribution;

// Exact law of fitness-proportionate selection with weights 1 / (1 + mean error).
auto fitness_proportionate_distribution(ErrorMatrix const& matrix, std::span<Index const> active_cases)
    -> SelectionDistribution;

} // namespace lexicase

#endif
