#include "lexicase/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lexicase/detail/parallel.hpp"
#include "lexicase/probability.hpp"

namespace lexicase {

namespace {

void validate_active(ErrorMatrix const& matrix, std::span<Index const> active)
{
    if (active.empty()) {
        throw UsageError("active case set is empty");
    }
    std::vector<bool> seen(matrix.n_cases(), false);
    for (auto c : active) {
        if (c >= matrix.n_cases()) {
            throw UsageError("active case " + std::to_string(c) + " out of range");
        }
        if (seen[c]) {
            throw UsageError("active case " + std::to_string(c) + " listed twice");
        }
        seen[c] = true;
    }
}

void validate_epsilons(ErrorMatrix const& matrix, std::span<Index const> active, std::span<double const> epsilons)
{
    if (epsilons.size() != matrix.n_cases()) {
        throw UsageError("expected one epsilon per case");
    }
    for (auto c : active) {
        if (!std::isfinite(epsilons[c]) || epsilons[c] < 0.0) {
            throw UsageError("epsilon for case " + std::to_string(c) + " must be finite and nonnegative");
        }
    }
}

auto gather(std::span<double const> per_case, std::span<Index const> cases) -> std::vector<double>
{
    std::vector<double> out;
    out.reserve(cases.size());
    for (auto c : cases) {
        out.push_back(per_case[c]);
    }
    return out;
}

auto full_pool(Index n) -> Pool
{
    Pool pool(n);
    std::iota(pool.begin(), pool.end(), Index { 0 });
    return pool;
}

auto finish(FilterResult&& filtered, CaseOrdering&& ordering, RandomSource& rng) -> Selection
{
    Selection s;
    s.trace.ordering = std::move(ordering);
    s.trace.pool_sizes = std::move(filtered.pool_sizes);
    s.trace.cases_consumed = filtered.cases_consumed;
    s.trace.final_tie_size = filtered.pool.size();
    s.winner = filtered.pool.size() > 1 ? filtered.pool[rng.below(filtered.pool.size())] : filtered.pool.front();
    s.trace.winner = s.winner;
    return s;
}

auto as_span(Vector const& v) -> std::span<double const>
{
    return { v.data(), static_cast<std::size_t>(v.size()) };
}

auto sample_cdf(Vector const& cdf, RandomSource& rng) -> Index
{
    auto const total = cdf(cdf.size() - 1);
    auto const u = rng.uniform() * total;
    auto const* it = std::upper_bound(cdf.data(), cdf.data() + cdf.size(), u);
    auto idx = static_cast<Index>(it - cdf.data());
    // u < total, so the clamp only matters if rounding pushes past the end.
    return std::min(idx, static_cast<Index>(cdf.size() - 1));
}

auto tournament(Vector const& means, Index k, RandomSource& rng) -> Index
{
    auto const n = static_cast<Index>(means.size());
    std::vector<Index> best;
    double best_value = 0.0;
    for (Index draw = 0; draw < k; ++draw) {
        auto const i = static_cast<Index>(rng.below(n));
        auto const v = means(static_cast<Eigen::Index>(i));
        if (best.empty() || v < best_value) {
            best.assign(1, i);
            best_value = v;
        } else if (v == best_value && std::find(best.begin(), best.end(), i) == best.end()) {
            best.push_back(i);
        }
    }
    return best.size() == 1 ? best.front() : best[rng.below(best.size())];
}

auto proportional_cdf(Vector const& means) -> Vector
{
    Vector cdf(means.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < means.size(); ++i) {
        acc += 1.0 / (1.0 + means(i));
        cdf(i) = acc;
    }
    return cdf;
}

} // namespace

void SelectorConfig::validate() const
{
    if (batch_size < 1) {
        throw UsageError("batch_size must be at least 1");
    }
    if (tournament_size < 1) {
        throw UsageError("tournament_size must be at least 1");
    }
    if (!std::isfinite(epsilon_value) || epsilon_value < 0.0) {
        throw UsageError("fixed epsilon must be finite and nonnegative");
    }
    if (!std::isfinite(alpha) || alpha <= 0.0) {
        throw UsageError("alpha must be positive");
    }
    if (weight_metric == WeightMetric::user) {
        if (user_weights.size() == 0) {
            throw UsageError("user weight metric needs a weight vector");
        }
        if (!user_weights.allFinite() || (user_weights.array() < 0.0).any()) {
            throw UsageError("weights must be finite and nonnegative");
        }
    }
}

auto SelectorConfig::is_baseline() const noexcept -> bool
{
    return variant == Variant::tournament || variant == Variant::fitness_proportionate
        || variant == Variant::uniform_random;
}

auto SelectorConfig::is_filtering() const noexcept -> bool
{
    return variant == Variant::lexicase || variant == Variant::epsilon || variant == Variant::batch
        || variant == Variant::weighted;
}

auto variant_name(Variant v) -> std::string_view
{
    switch (v) {
    case Variant::lexicase: return "lexicase";
    case Variant::epsilon: return "epsilon";
    case Variant::batch: return "batch";
    case Variant::weighted: return "weighted";
    case Variant::plexicase: return "plexicase";
    case Variant::tournament: return "tournament";
    case Variant::fitness_proportionate: return "fitness_proportionate";
    case Variant::uniform_random: return "uniform_random";
    }
    return "unknown";
}

auto parse_variant(std::string_view name) -> Variant
{
    for (auto v : { Variant::lexicase, Variant::epsilon, Variant::batch, Variant::weighted, Variant::plexicase,
                    Variant::tournament, Variant::fitness_proportionate, Variant::uniform_random }) {
        if (variant_name(v) == name) {
            return v;
        }
    }
    throw UsageError("unknown selector '" + std::string(name) + "'");
}

auto lexicase_filter(ErrorMatrix const& matrix, std::span<Index const> ordering, std::span<double const> epsilons)
    -> FilterResult
{
    FilterResult r;
    r.pool = full_pool(matrix.n_individuals());
    for (auto c : ordering) {
        if (r.pool.size() <= 1) {
            break;
        }
        filter_elite(matrix, r.pool, c, epsilons.empty() ? 0.0 : epsilons[c]);
        r.pool_sizes.push_back(r.pool.size());
        ++r.cases_consumed;
    }
    return r;
}

auto batch_filter(ErrorMatrix const& matrix, std::span<Index const> ordering, Index batch_size) -> FilterResult
{
    if (batch_size < 1) {
        throw UsageError("batch_size must be at least 1");
    }
    FilterResult r;
    r.pool = full_pool(matrix.n_individuals());
    std::vector<double> batch_mean;
    for (std::size_t start = 0; start < ordering.size() && r.pool.size() > 1; start += batch_size) {
        auto const batch = ordering.subspan(start, std::min<std::size_t>(batch_size, ordering.size() - start));
        batch_mean.assign(r.pool.size(), 0.0);
        for (std::size_t k = 0; k < r.pool.size(); ++k) {
            double sum = 0.0;
            for (auto c : batch) {
                sum += matrix(r.pool[k], c);
            }
            batch_mean[k] = sum / static_cast<double>(batch.size());
        }
        double const best = *std::min_element(batch_mean.begin(), batch_mean.end());
        std::size_t k = 0;
        std::erase_if(r.pool, [&](Index) { return batch_mean[k++] > best; });
        r.pool_sizes.push_back(r.pool.size());
        ++r.cases_consumed;
    }
    return r;
}

auto lexicase_select(ErrorMatrix const& matrix, std::span<Index const> active_cases, RandomSource& rng) -> Selection
{
    validate_active(matrix, active_cases);
    auto ordering = shuffled_order(active_cases, rng);
    return finish(lexicase_filter(matrix, ordering), std::move(ordering), rng);
}

auto epsilon_lexicase_select(ErrorMatrix const& matrix,
                             std::span<Index const> active_cases,
                             std::span<double const> epsilons,
                             RandomSource& rng) -> Selection
{
    validate_active(matrix, active_cases);
    validate_epsilons(matrix, active_cases, epsilons);
    auto ordering = shuffled_order(active_cases, rng);
    return finish(lexicase_filter(matrix, ordering, epsilons), std::move(ordering), rng);
}

auto batch_lexicase_select(ErrorMatrix const& matrix,
                           std::span<Index const> active_cases,
                           Index batch_size,
                           RandomSource& rng) -> Selection
{
    validate_active(matrix, active_cases);
    if (batch_size < 1 || batch_size > active_cases.size()) {
        throw UsageError("batch_size must be between 1 and the number of active cases");
    }
    auto ordering = shuffled_order(active_cases, rng);
    return finish(batch_filter(matrix, ordering, batch_size), std::move(ordering), rng);
}

auto weighted_lexicase_select(ErrorMatrix const& matrix,
                              std::span<Index const> active_cases,
                              std::span<double const> weights,
                              RandomSource& rng) -> Selection
{
    validate_active(matrix, active_cases);
    if (weights.size() != matrix.n_cases()) {
        throw UsageError("expected one weight per case");
    }
    auto const local = gather(weights, active_cases);
    auto ordering = shuffled_order(active_cases, local, rng);
    return finish(lexicase_filter(matrix, ordering), std::move(ordering), rng);
}

auto mean_errors(ErrorMatrix const& matrix, std::span<Index const> active_cases) -> Vector
{
    Vector sums = Vector::Zero(static_cast<Eigen::Index>(matrix.n_individuals()));
    for (auto c : active_cases) {
        sums += matrix.column(c);
    }
    return sums / static_cast<double>(active_cases.size());
}

auto failure_rate_weights(ErrorMatrix const& matrix, std::span<Index const> active_cases) -> Vector
{
    Vector w = Vector::Zero(static_cast<Eigen::Index>(matrix.n_cases()));
    for (auto c : active_cases) {
        w(static_cast<Eigen::Index>(c)) = static_cast<double>((matrix.column(c).array() > 0.0).count())
            / static_cast<double>(matrix.n_individuals());
    }
    return w;
}

auto baseline_select(ErrorMatrix const& matrix,
                     std::span<Index const> active_cases,
                     SelectorConfig const& config,
                     RandomSource& rng) -> Index
{
    if (!config.is_baseline()) {
        throw UsageError("baseline_select needs a tournament, fitness_proportionate or uniform_random config");
    }
    config.validate();
    validate_active(matrix, active_cases);
    auto const prepared = prepare_selector(matrix, active_cases, config);
    return select_one(matrix, active_cases, prepared, rng);
}

auto prepare_selector(ErrorMatrix const& matrix, std::span<Index const> active_cases, SelectorConfig const& config)
    -> PreparedSelector
{
    config.validate();
    validate_active(matrix, active_cases);

    PreparedSelector p;
    p.config = config;
    auto const m = static_cast<Eigen::Index>(matrix.n_cases());
    switch (config.variant) {
    case Variant::epsilon:
        switch (config.epsilon_source) {
        case EpsilonSource::zero: p.epsilons = Vector::Zero(m); break;
        case EpsilonSource::mad: p.epsilons = mad_epsilons(matrix, active_cases); break;
        case EpsilonSource::fixed: p.epsilons = Vector::Constant(m, config.epsilon_value); break;
        }
        break;
    case Variant::batch:
        if (config.batch_size > active_cases.size()) {
            throw UsageError("batch_size exceeds the number of active cases");
        }
        break;
    case Variant::weighted:
        switch (config.weight_metric) {
        case WeightMetric::uniform: p.weights = Vector::Ones(m); break;
        case WeightMetric::failure_rate: {
            p.weights = failure_rate_weights(matrix, active_cases);
            bool any = false;
            for (auto c : active_cases) {
                any = any || p.weights(static_cast<Eigen::Index>(c)) > 0.0;
            }
            if (!any) {
                // Every case solved by everyone: no skew to apply.
                p.weights = Vector::Ones(m);
            }
            break;
        }
        case WeightMetric::user:
            if (config.user_weights.size() != m) {
                throw UsageError("expected one weight per case");
            }
            p.weights = config.user_weights;
            break;
        }
        break;
    case Variant::plexicase: {
        auto const dist = plexicase_distribution(matrix, active_cases, config.alpha);
        p.cdf = Vector(dist.probs.size());
        std::partial_sum(dist.probs.begin(), dist.probs.end(), p.cdf.begin());
        break;
    }
    case Variant::tournament:
        p.means = mean_errors(matrix, active_cases);
        break;
    case Variant::fitness_proportionate:
        p.cdf = proportional_cdf(mean_errors(matrix, active_cases));
        break;
    case Variant::lexicase:
    case Variant::uniform_random:
        break;
    }
    return p;
}

auto select_one(ErrorMatrix const& matrix,
                std::span<Index const> active_cases,
                PreparedSelector const& prepared,
                RandomSource& rng,
                SelectionTrace* trace) -> Index
{
    auto const& config = prepared.config;
    Selection s;
    switch (config.variant) {
    case Variant::lexicase: {
        auto ordering = shuffled_order(active_cases, rng);
        s = finish(lexicase_filter(matrix, ordering), std::move(ordering), rng);
        break;
    }
    case Variant::epsilon: {
        auto ordering = shuffled_order(active_cases, rng);
        s = finish(lexicase_filter(matrix, ordering, as_span(prepared.epsilons)), std::move(ordering), rng);
        break;
    }
    case Variant::batch: {
        auto ordering = shuffled_order(active_cases, rng);
        s = finish(batch_filter(matrix, ordering, config.batch_size), std::move(ordering), rng);
        break;
    }
    case Variant::weighted: {
        auto const local = gather(as_span(prepared.weights), active_cases);
        auto ordering = shuffled_order(active_cases, local, rng);
        s = finish(lexicase_filter(matrix, ordering), std::move(ordering), rng);
        break;
    }
    case Variant::tournament: return tournament(prepared.means, config.tournament_size, rng);
    case Variant::plexicase:
    case Variant::fitness_proportionate: return sample_cdf(prepared.cdf, rng);
    case Variant::uniform_random: return static_cast<Index>(rng.below(matrix.n_individuals()));
    }
    if (trace != nullptr) {
        *trace = std::move(s.trace);
    }
    return s.winner;
}

auto select_parents(ErrorMatrix const& matrix,
                    std::span<Index const> active_cases,
                    SelectorConfig const& config,
                    Index n_parents,
                    RandomSource const& rng,
                    unsigned jobs,
                    bool keep_traces) -> ParentSelection
{
    if (n_parents < 1) {
        throw UsageError("n_parents must be at least 1");
    }
    auto const prepared = prepare_selector(matrix, active_cases, config);

    ParentSelection out;
    out.parents.resize(n_parents);
    bool const traced = keep_traces && config.is_filtering();
    if (traced) {
        out.traces.resize(n_parents);
    }

    detail::parallel_chunks(n_parents, jobs, [&](Index begin, Index end, Index) {
        for (Index k = begin; k < end; ++k) {
            auto stream = rng.derive(k);
            out.parents[k] = select_one(matrix, active_cases, prepared, stream, traced ? &out.traces[k] : nullptr);
        }
    });
    return out;
}

} // namespace lexicase
