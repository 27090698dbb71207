#include "lexicase/probability.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "lexicase/detail/parallel.hpp"

namespace lexicase {

SelectionDistribution::SelectionDistribution(std::vector<double> p)
    : probs(std::move(p))
{
    if (probs.empty()) {
        throw UsageError("distribution over zero individuals");
    }
    double total = 0.0;
    for (auto v : probs) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw UsageError("distribution entries must be finite and nonnegative");
        }
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw UsageError("distribution entries must sum to 1");
    }
}

auto behavior_groups(ErrorMatrix const& matrix, std::span<Index const> cases) -> BehaviorGroups
{
    BehaviorGroups g;
    g.group_of.resize(matrix.n_individuals());
    std::map<std::vector<double>, Index> seen;
    std::vector<double> key(cases.size());
    for (Index i = 0; i < matrix.n_individuals(); ++i) {
        for (std::size_t j = 0; j < cases.size(); ++j) {
            key[j] = matrix(i, cases[j]);
        }
        auto [it, inserted] = seen.try_emplace(key, g.representative.size());
        if (inserted) {
            g.representative.push_back(i);
            g.multiplicity.push_back(0);
        }
        g.group_of[i] = it->second;
        ++g.multiplicity[it->second];
    }
    return g;
}

namespace {

using Mask = std::uint64_t;

struct MaskPair {
    Mask pool;
    Mask cases;
    auto operator==(MaskPair const&) const -> bool = default;
};

struct MaskPairHash {
    auto operator()(MaskPair const& k) const noexcept -> std::size_t
    {
        std::uint64_t s = k.pool ^ (k.cases * GoldenGamma);
        return static_cast<std::size_t>(splitmix64(s));
    }
};

class ExactSolver {
public:
    ExactSolver(std::vector<std::vector<double>> values, std::vector<double> epsilons, std::vector<double> multiplicity)
        : values_(std::move(values))
        , epsilons_(std::move(epsilons))
        , multiplicity_(std::move(multiplicity))
    {
    }

    auto solve(Mask pool, Mask cases) -> std::vector<double>
    {
        auto const groups = values_.size();
        if (std::popcount(pool) == 1) {
            std::vector<double> one_hot(groups, 0.0);
            one_hot[static_cast<std::size_t>(std::countr_zero(pool))] = 1.0;
            return one_hot;
        }

        // Drop cases that leave this pool unchanged; they cannot shrink any sub-pool either.
        Mask reduced = 0;
        std::vector<std::pair<Index, Mask>> branches;
        for (Mask rest = cases; rest != 0; rest &= rest - 1) {
            auto const j = static_cast<Index>(std::countr_zero(rest));
            auto const filtered = filter(pool, j);
            if (filtered != pool) {
                reduced |= Mask { 1 } << j;
                branches.emplace_back(j, filtered);
            }
        }
        if (reduced == 0) {
            return uniform(pool);
        }

        MaskPair const key { pool, reduced };
        if (auto it = memo_.find(key); it != memo_.end()) {
            return it->second;
        }
        std::vector<double> result(groups, 0.0);
        double const share = 1.0 / static_cast<double>(branches.size());
        for (auto const& [j, filtered] : branches) {
            auto const sub = solve(filtered, reduced & ~(Mask { 1 } << j));
            for (std::size_t g = 0; g < groups; ++g) {
                result[g] += share * sub[g];
            }
        }
        memo_.emplace(key, result);
        return result;
    }

private:
    auto filter(Mask pool, Index j) const -> Mask
    {
        double best = std::numeric_limits<double>::infinity();
        for (Mask rest = pool; rest != 0; rest &= rest - 1) {
            best = std::min(best, values_[static_cast<std::size_t>(std::countr_zero(rest))][j]);
        }
        double const threshold = survival_threshold(best, epsilons_[j]);
        Mask kept = 0;
        for (Mask rest = pool; rest != 0; rest &= rest - 1) {
            auto const g = static_cast<std::size_t>(std::countr_zero(rest));
            if (values_[g][j] <= threshold) {
                kept |= Mask { 1 } << g;
            }
        }
        return kept;
    }

    auto uniform(Mask pool) const -> std::vector<double>
    {
        std::vector<double> out(values_.size(), 0.0);
        double total = 0.0;
        for (Mask rest = pool; rest != 0; rest &= rest - 1) {
            total += multiplicity_[static_cast<std::size_t>(std::countr_zero(rest))];
        }
        for (Mask rest = pool; rest != 0; rest &= rest - 1) {
            auto const g = static_cast<std::size_t>(std::countr_zero(rest));
            out[g] = multiplicity_[g] / total;
        }
        return out;
    }

    std::vector<std::vector<double>> values_; // group x active-case position
    std::vector<double> epsilons_;            // per active-case position
    std::vector<double> multiplicity_;
    std::unordered_map<MaskPair, std::vector<double>, MaskPairHash> memo_;
};

void check_active(ErrorMatrix const& matrix, std::span<Index const> active)
{
    if (active.empty()) {
        throw UsageError("active case set is empty");
    }
    for (auto c : active) {
        if (c >= matrix.n_cases()) {
            throw UsageError("active case " + std::to_string(c) + " out of range");
        }
    }
}

auto case_epsilons(ErrorMatrix const& matrix, std::span<Index const> active, std::span<double const> epsilons)
    -> std::vector<double>
{
    std::vector<double> out(active.size(), 0.0);
    if (epsilons.empty()) {
        return out;
    }
    if (epsilons.size() != matrix.n_cases()) {
        throw UsageError("expected one epsilon per case");
    }
    for (std::size_t j = 0; j < active.size(); ++j) {
        auto const e = epsilons[active[j]];
        if (!std::isfinite(e) || e < 0.0) {
            throw UsageError("epsilons must be finite and nonnegative");
        }
        out[j] = e;
    }
    return out;
}

auto spread_over_individuals(BehaviorGroups const& groups, std::vector<double> const& group_mass) -> SelectionDistribution
{
    std::vector<double> probs(groups.group_of.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        auto const g = groups.group_of[i];
        probs[i] = group_mass[g] / static_cast<double>(groups.multiplicity[g]);
    }
    // Renormalize away accumulated rounding.
    double const total = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (auto& p : probs) {
        p /= total;
    }
    return SelectionDistribution(std::move(probs));
}

auto normalized_counts(std::vector<Index> const& counts, Index trials) -> SelectionDistribution
{
    std::vector<double> probs(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        probs[i] = static_cast<double>(counts[i]) / static_cast<double>(trials);
    }
    return SelectionDistribution(std::move(probs));
}

} // namespace

auto exact_distribution(ErrorMatrix const& matrix,
                        std::span<Index const> active_cases,
                        std::span<double const> epsilons,
                        bool override_guard) -> SelectionDistribution
{
    check_active(matrix, active_cases);
    auto const eps = case_epsilons(matrix, active_cases, epsilons);
    auto const groups = behavior_groups(matrix, active_cases);

    auto const k = groups.size();
    auto const m = active_cases.size();
    if (!override_guard && (k > ExactGuardDistinctRows || m > ExactGuardCases)) {
        throw ResourceError("exact distribution refused: " + std::to_string(k) + " distinct rows and " + std::to_string(m)
                            + " cases exceed the guard of " + std::to_string(ExactGuardDistinctRows) + " rows / "
                            + std::to_string(ExactGuardCases) + " cases");
    }
    if (k > ExactHardLimit || m > ExactHardLimit) {
        throw ResourceError("exact distribution supports at most 64 distinct rows and 64 cases");
    }

    std::vector<std::vector<double>> values(k, std::vector<double>(m));
    std::vector<double> multiplicity(k);
    for (std::size_t g = 0; g < k; ++g) {
        for (std::size_t j = 0; j < m; ++j) {
            values[g][j] = matrix(groups.representative[g], active_cases[j]);
        }
        multiplicity[g] = static_cast<double>(groups.multiplicity[g]);
    }

    auto const all = [](std::size_t bits) { return bits == 64 ? ~Mask { 0 } : (Mask { 1 } << bits) - 1; };
    ExactSolver solver(std::move(values), eps, std::move(multiplicity));
    return spread_over_individuals(groups, solver.solve(all(k), all(m)));
}

auto plexicase_distribution(ErrorMatrix const& matrix,
                            std::span<Index const> active_cases,
                            double alpha,
                            std::span<double const> epsilons) -> SelectionDistribution
{
    if (!std::isfinite(alpha) || alpha <= 0.0) {
        throw UsageError("alpha must be positive");
    }
    check_active(matrix, active_cases);
    auto const eps = case_epsilons(matrix, active_cases, epsilons);
    auto const groups = behavior_groups(matrix, active_cases);
    auto const k = groups.size();

    std::vector<double> score(k, 0.0);
    std::vector<Index> elite;
    double const case_share = 1.0 / static_cast<double>(active_cases.size());
    for (std::size_t j = 0; j < active_cases.size(); ++j) {
        auto const col = matrix.column(active_cases[j]);
        double best = std::numeric_limits<double>::infinity();
        for (auto rep : groups.representative) {
            best = std::min(best, col(static_cast<Eigen::Index>(rep)));
        }
        elite.clear();
        for (std::size_t g = 0; g < k; ++g) {
            if (col(static_cast<Eigen::Index>(groups.representative[g])) <= survival_threshold(best, eps[j])) {
                elite.push_back(g);
            }
        }
        for (auto g : elite) {
            score[g] += case_share / static_cast<double>(elite.size());
        }
    }

    // score^alpha, computed relative to the top score so large alpha cannot underflow everything.
    double const top = *std::max_element(score.begin(), score.end());
    if (!(top > 0.0)) {
        throw std::logic_error("plexicase scores are all zero");
    }
    std::vector<double> mass(k, 0.0);
    double total = 0.0;
    for (std::size_t g = 0; g < k; ++g) {
        if (score[g] > 0.0) {
            mass[g] = std::pow(score[g] / top, alpha);
            total += mass[g];
        }
    }
    for (auto& v : mass) {
        v /= total;
    }
    return spread_over_individuals(groups, mass);
}

auto empirical_distribution(ErrorMatrix const& matrix,
                            std::span<Index const> active_cases,
                            SelectorConfig const& config,
                            Index trials,
                            RandomSource const& rng,
                            unsigned jobs) -> SelectionDistribution
{
    if (trials < 1) {
        throw UsageError("trials must be at least 1");
    }
    auto const prepared = prepare_selector(matrix, active_cases, config);
    auto const n = matrix.n_individuals();
    auto const workers = std::max(1U, jobs);
    std::vector<std::vector<Index>> counts(workers, std::vector<Index>(n, 0));
    detail::parallel_chunks(trials, workers, [&](Index begin, Index end, Index worker) {
        auto& local = counts[worker];
        for (Index t = begin; t < end; ++t) {
            auto stream = rng.derive(t);
            ++local[select_one(matrix, active_cases, prepared, stream)];
        }
    });
    for (std::size_t w = 1; w < counts.size(); ++w) {
        for (Index i = 0; i < n; ++i) {
            counts[0][i] += counts[w][i];
        }
    }
    return normalized_counts(counts[0], trials);
}

auto empirical_distribution(Index n_individuals,
                            Index trials,
                            RandomSource const& rng,
                            std::function<Index(RandomSource&)> const& selector) -> SelectionDistribution
{
    if (trials < 1) {
        throw UsageError("trials must be at least 1");
    }
    std::vector<Index> counts(n_individuals, 0);
    for (Index t = 0; t < trials; ++t) {
        auto stream = rng.derive(t);
        auto const winner = selector(stream);
        if (winner >= n_individuals) {
            throw UsageError("selector returned an out-of-range index");
        }
        ++counts[winner];
    }
    return normalized_counts(counts, trials);
}

auto sample_index(SelectionDistribution const& dist, RandomSource& rng) -> Index
{
    double const u = rng.uniform();
    double acc = 0.0;
    Index last_positive = 0;
    for (Index i = 0; i < dist.size(); ++i) {
        if (dist[i] > 0.0) {
            acc += dist[i];
            last_positive = i;
            if (u < acc) {
                return i;
            }
        }
    }
    return last_positive;
}

auto total_variation(SelectionDistribution const& a, SelectionDistribution const& b) -> double
{
    if (a.size() != b.size()) {
        throw UsageError("distributions have different lengths");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += std::abs(a[i] - b[i]);
    }
    return std::clamp(0.5 * sum, 0.0, 1.0);
}

auto tournament_distribution(ErrorMatrix const& matrix, std::span<Index const> active_cases, Index tournament_size)
    -> SelectionDistribution
{
    if (tournament_size < 1) {
        throw UsageError("tournament_size must be at least 1");
    }
    check_active(matrix, active_cases);
    auto const means = mean_errors(matrix, active_cases);
    auto const n = static_cast<double>(means.size());
    auto const k = static_cast<double>(tournament_size);
    std::vector<double> probs(static_cast<std::size_t>(means.size()));
    for (Eigen::Index i = 0; i < means.size(); ++i) {
        auto const equal = static_cast<double>((means.array() == means(i)).count());
        auto const worse = static_cast<double>((means.array() > means(i)).count());
        // The winner's tie class is i's exactly when every entrant is at least as bad
        // as i and not all are strictly worse; members of the class are symmetric.
        probs[static_cast<std::size_t>(i)] = (std::pow((equal + worse) / n, k) - std::pow(worse / n, k)) / equal;
    }
    return SelectionDistribution(std::move(probs));
}

auto fitness_proportionate_distribution(ErrorMatrix const& matrix, std::span<Index const> active_cases)
    -> SelectionDistribution
{
    check_active(matrix, active_cases);
    Vector w = (1.0 + mean_errors(matrix, active_cases).array()).inverse().matrix();
    w /= w.sum();
    return SelectionDistribution(std::vector<double>(w.begin(), w.end()));
}

} // namespace lexicase
