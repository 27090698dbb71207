#ifndef LEXICASE_SELECTORS_HPP
#define LEXICASE_SELECTORS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexicase/core.hpp"

namespace lexicase {

// Record of one filtering-based selection event.
struct SelectionTrace {
    CaseOrdering ordering;
    std::vector<Index> pool_sizes; // pool cardinality after each filtering step
    Index cases_consumed = 0;
    Index final_tie_size = 1;
    Index winner = 0;

    friend auto operator==(SelectionTrace const&, SelectionTrace const&) -> bool = default;
};

struct Selection {
    Index winner = 0;
    SelectionTrace trace;
};

enum class Variant {
    lexicase,
    epsilon,
    batch,
    weighted,
    plexicase,
    tournament,
    fitness_proportionate,
    uniform_random,
};

enum class EpsilonSource { zero, mad, fixed };
enum class WeightMetric { uniform, failure_rate, user };

struct SelectorConfig {
    Variant variant = Variant::lexicase;
    EpsilonSource epsilon_source = EpsilonSource::mad;
    double epsilon_value = 0.0;
    Index batch_size = 1;
    WeightMetric weight_metric = WeightMetric::uniform;
    Vector user_weights; // one entry per case of the full matrix
    Index tournament_size = 7;
    double alpha = 1.0; // plexicase pressure exponent

    void validate() const;
    [[nodiscard]] auto is_baseline() const noexcept -> bool;
    [[nodiscard]] auto is_filtering() const noexcept -> bool;
};

auto variant_name(Variant v) -> std::string_view;
auto parse_variant(std::string_view name) -> Variant;

// Outcome of running a fixed case ordering through lexicase filtering.
struct FilterResult {
    Pool pool;
    std::vector<Index> pool_sizes;
    Index cases_consumed = 0;
};

// Deterministic part of lexicase selection: filter the full population along
// `ordering`, stopping early once a single individual is left. `epsilons` is
// indexed by case id; an empty span means zero everywhere.
auto lexicase_filter(ErrorMatrix const& matrix, std::span<Index const> ordering, std::span<double const> epsilons = {})
    -> FilterResult;

// Batch filtering: consecutive chunks of `ordering` of size batch_size are
// averaged per individual and filtered with epsilon 0 on the batch means.
auto batch_filter(ErrorMatrix const& matrix, std::span<Index const> ordering, Index batch_size) -> FilterResult;

auto lexicase_select(ErrorMatrix const& matrix, std::span<Index const> active_cases, RandomSource& rng) -> Selection;

auto epsilon_lexicase_select(ErrorMatrix const& matrix,
                             std::span<Index const> active_cases,
                             std::span<double const> epsilons,
                             RandomSource& rng) -> Selection;

auto batch_lexicase_select(ErrorMatrix const& matrix,
                           std::span<Index const> active_cases,
                           Index batch_size,
                           RandomSource& rng) -> Selection;

// `weights` is indexed by case id (length n_cases).
auto weighted_lexicase_select(ErrorMatrix const& matrix,
                              std::span<Index const> active_cases,
                              std::span<double const> weights,
                              RandomSource& rng) -> Selection;

// Tournament, fitness-proportionate or uniform-random selection on mean error over active cases.
auto baseline_select(ErrorMatrix const& matrix,
                     std::span<Index const> active_cases,
                     SelectorConfig const& config,
                     RandomSource& rng) -> Index;

// Mean error of each individual over the active cases.
auto mean_errors(ErrorMatrix const& matrix, std::span<Index const> active_cases) -> Vector;

// Fraction of the population with nonzero error on each active case (zero elsewhere).
auto failure_rate_weights(ErrorMatrix const& matrix, std::span<Index const> active_cases) -> Vector;

// Per-generation quantities a selector needs: epsilons and case weights.
struct PreparedSelector {
    SelectorConfig config;
    Vector epsilons; // indexed by case id
    Vector weights;  // indexed by case id
    Vector means;    // mean active-case error per individual, tournament only
    Vector cdf;      // cumulative sampling mass, plexicase and fitness-proportionate only
};

auto prepare_selector(ErrorMatrix const& matrix, std::span<Index const> active_cases, SelectorConfig const& config)
    -> PreparedSelector;

// One selection event with a prepared selector. `trace` is filled for filtering variants.
auto select_one(ErrorMatrix const& matrix,
                std::span<Index const> active_cases,
                PreparedSelector const& prepared,
                RandomSource& rng,
                SelectionTrace* trace = nullptr) -> Index;

struct ParentSelection {
    std::vector<Index> parents;
    std::vector<SelectionTrace> traces; // empty for baselines and plexicase
};

/// Runs n_parents independent selection events. Event k draws from
/// rng.derive(k), so the result depends only on the seed and never on `jobs`.
auto select_parents(ErrorMatrix const& matrix,
                    std::span<Index const> active_cases,
                    SelectorConfig const& config,
                    Index n_parents,
                    RandomSource const& rng,
                    unsigned jobs = 1,
                    bool keep_traces = true) -> ParentSelection;

} // namespace lexicase

#endif
