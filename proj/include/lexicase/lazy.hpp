#ifndef LEXICASE_LAZY_HPP
#define LEXICASE_LAZY_HPP

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "lexicase/core.hpp"
#include "lexicase/selectors.hpp"

namespace lexicase {

/// Memoizing on-demand error table.
///
/// Each (individual, case) cell is computed at most once, also under
/// concurrent requests. A failing or invalid evaluation surfaces as an
/// EvaluationError naming the cell; the cell stays unset.
class LazyEvaluator {
public:
    using ErrorFunction = std::function<double(Index individual, Index test_case)>;

    LazyEvaluator(Index n_individuals, Index n_cases, ErrorFunction error);

    LazyEvaluator(LazyEvaluator const&) = delete;
    auto operator=(LazyEvaluator const&) -> LazyEvaluator& = delete;

    auto error(Index individual, Index test_case) -> double;

    [[nodiscard]] auto n_individuals() const noexcept -> Index { return n_individuals_; }
    [[nodiscard]] auto n_cases() const noexcept -> Index { return n_cases_; }
    [[nodiscard]] auto cells_evaluated() const noexcept -> Index { return cells_evaluated_.load(); }
    [[nodiscard]] auto cells_requested() const noexcept -> Index { return cells_requested_.load(); }
    [[nodiscard]] auto is_cached(Index individual, Index test_case) const -> bool;

private:
    Index n_individuals_;
    Index n_cases_;
    ErrorFunction error_;
    std::vector<double> memo_;
    std::unique_ptr<std::once_flag[]> once_; // NOLINT(*-avoid-c-arrays)
    std::unique_ptr<std::atomic<bool>[]> ready_; // NOLINT(*-avoid-c-arrays)
    std::atomic<Index> cells_evaluated_ { 0 };
    std::atomic<Index> cells_requested_ { 0 };
};

struct LazySelection {
    Index winner = 0;
    SelectionTrace trace;
    Index cells_evaluated = 0; // new cells computed during this event
};

/// Lexicase selection that asks the evaluator only for the (pool member,
/// case) errors each filtering step needs. Draws from `rng` exactly as
/// lexicase_select (no weights) or weighted_lexicase_select (weights indexed by
/// case id) would, so both return the same winner and trace on the same stream.
auto lazy_lexicase_select(LazyEvaluator& evaluator,
                          std::span<Index const> active_cases,
                          std::span<double const> weights,
                          RandomSource& rng) -> LazySelection;

auto lazy_lexicase_select(LazyEvaluator& evaluator, std::span<Index const> active_cases, RandomSource& rng)
    -> LazySelection;

} // namespace lexicase

#endif
