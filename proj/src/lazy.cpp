#include "lexicase/lazy.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>

namespace lexicase {

LazyEvaluator::LazyEvaluator(Index n_individuals, Index n_cases, ErrorFunction error)
    : n_individuals_(n_individuals)
    , n_cases_(n_cases)
    , error_(std::move(error))
    , memo_(n_individuals * n_cases, 0.0)
    , once_(std::make_unique<std::once_flag[]>(n_individuals * n_cases)) // NOLINT(*-avoid-c-arrays)
    , ready_(std::make_unique<std::atomic<bool>[]>(n_individuals * n_cases)) // NOLINT(*-avoid-c-arrays)
{
    if (n_individuals < 1 || n_cases < 1) {
        throw UsageError("lazy evaluator needs at least one individual and one case");
    }
    if (!error_) {
        throw UsageError("lazy evaluator needs an error function");
    }
}

auto LazyEvaluator::error(Index individual, Index test_case) -> double
{
    if (individual >= n_individuals_ || test_case >= n_cases_) {
        throw UsageError("lazy evaluator cell out of range");
    }
    ++cells_requested_;
    auto const cell = individual * n_cases_ + test_case;
    std::call_once(once_[cell], [&] {
        double value = 0.0;
        try {
            value = error_(individual, test_case);
        } catch (EvaluationError const&) {
            throw;
        } catch (std::exception const& e) {
            throw EvaluationError(individual, test_case, e.what());
        }
        if (!std::isfinite(value) || value < 0.0) {
            throw EvaluationError(individual, test_case, "error value " + std::to_string(value) + " is not finite and nonnegative");
        }
        memo_[cell] = value;
        ready_[cell].store(true, std::memory_order_release);
        ++cells_evaluated_;
    });
    return memo_[cell];
}

auto LazyEvaluator::is_cached(Index individual, Index test_case) const -> bool
{
    if (individual >= n_individuals_ || test_case >= n_cases_) {
        throw UsageError("lazy evaluator cell out of range");
    }
    return ready_[individual * n_cases_ + test_case].load(std::memory_order_acquire);
}

namespace {

auto lazy_select(LazyEvaluator& evaluator, std::span<Index const> active_cases, std::span<double const> weights,
                 bool weighted, RandomSource& rng) -> LazySelection
{
    if (active_cases.empty()) {
        throw UsageError("active case set is empty");
    }
    for (auto c : active_cases) {
        if (c >= evaluator.n_cases()) {
            throw UsageError("active case " + std::to_string(c) + " out of range");
        }
    }

    LazySelection out;
    auto const before = evaluator.cells_evaluated();
    if (weighted) {
        if (weights.size() != evaluator.n_cases()) {
            throw UsageError("expected one weight per case");
        }
        std::vector<double> local;
        local.reserve(active_cases.size());
        for (auto c : active_cases) {
            local.push_back(weights[c]);
        }
        out.trace.ordering = shuffled_order(active_cases, local, rng);
    } else {
        out.trace.ordering = shuffled_order(active_cases, rng);
    }

    Pool pool(evaluator.n_individuals());
    std::iota(pool.begin(), pool.end(), Index { 0 });
    std::vector<double> errs;
    for (auto c : out.trace.ordering) {
        if (pool.size() <= 1) {
            break;
        }
        errs.resize(pool.size());
        for (std::size_t k = 0; k < pool.size(); ++k) {
            errs[k] = evaluator.error(pool[k], c);
        }
        double const best = *std::min_element(errs.begin(), errs.end());
        std::size_t k = 0;
        std::erase_if(pool, [&](Index) { return errs[k++] > best; });
        out.trace.pool_sizes.push_back(pool.size());
        ++out.trace.cases_consumed;
    }

    out.trace.final_tie_size = pool.size();
    out.winner = pool.size() > 1 ? pool[rng.below(pool.size())] : pool.front();
    out.trace.winner = out.winner;
    out.cells_evaluated = evaluator.cells_evaluated() - before;
    return out;
}

} // namespace

auto lazy_lexicase_select(LazyEvaluator& evaluator,
                          std::span<Index const> active_cases,
                          std::span<double const> weights,
                          RandomSource& rng) -> LazySelection
{
    return lazy_select(evaluator, active_cases, weights, true, rng);
}

auto lazy_lexicase_select(LazyEvaluator& evaluator, std::span<Index const> active_cases, RandomSource& rng)
    -> LazySelection
{
    return lazy_select(evaluator, active_cases, {}, false, rng);
}

} // namespace lexicase
