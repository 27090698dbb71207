#include "lexicase/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace lexicase {

SolveMatrix::SolveMatrix(BoolMatrix solved)
    : solved_(std::move(solved))
{
    if (solved_.rows() < 1 || solved_.cols() < 1) {
        throw UsageError("solve matrix needs at least one row and one case");
    }
}

auto SolveMatrix::from_errors(Matrix const& errors, double threshold) -> SolveMatrix
{
    if (!(threshold >= 0.0)) {
        throw UsageError("solve threshold must be nonnegative");
    }
    return SolveMatrix(errors.array() <= threshold);
}

auto sample_size(double rate, Index n) -> Index
{
    if (!(rate > 0.0 && rate <= 1.0)) {
        throw UsageError("rate must lie in (0, 1]");
    }
    auto const rounded = static_cast<Index>(std::floor(rate * static_cast<double>(n) + 0.5));
    return std::clamp<Index>(rounded, 1, std::max<Index>(n, 1));
}

auto uniform_subset(Index n, Index k, RandomSource& rng) -> CaseSet
{
    if (k > n) {
        throw UsageError("subset larger than the set");
    }
    CaseSet all(n);
    std::iota(all.begin(), all.end(), Index { 0 });
    // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
    for (Index i = 0; i < k; ++i) {
        auto const j = i + static_cast<Index>(rng.below(n - i));
        std::swap(all[i], all[j]);
    }
    all.resize(k);
    std::sort(all.begin(), all.end());
    return all;
}

auto random_downsample(Index n_cases, double rate, RandomSource& rng) -> CaseSet
{
    if (n_cases < 1) {
        throw UsageError("need at least one case");
    }
    return uniform_subset(n_cases, sample_size(rate, n_cases), rng);
}

auto case_distance(SolveMatrix const& solves, Index a, Index b) -> double
{
    if (a >= solves.n_cases() || b >= solves.n_cases()) {
        throw UsageError("case index out of range");
    }
    auto const& v = solves.values();
    auto const differ = (v.col(static_cast<Eigen::Index>(a)) != v.col(static_cast<Eigen::Index>(b))).count();
    return static_cast<double>(differ) / static_cast<double>(solves.n_rows());
}

auto case_distances(SolveMatrix const& solves) -> Matrix
{
    auto const m = static_cast<Eigen::Index>(solves.n_cases());
    Matrix d = Matrix::Zero(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = a + 1; b < m; ++b) {
            d(a, b) = d(b, a) = case_distance(solves, static_cast<Index>(a), static_cast<Index>(b));
        }
    }
    return d;
}

auto informed_downsample(SolveMatrix const& solves, Index size, RandomSource& rng) -> CaseSet
{
    if (size < 1 || size > solves.n_cases()) {
        throw UsageError("downsample size must be between 1 and the number of cases");
    }
    auto const start = static_cast<Index>(rng.below(solves.n_cases()));
    return farthest_first(solves, size, start, rng);
}

auto farthest_first(SolveMatrix const& solves, Index size, Index start, RandomSource& rng) -> CaseSet
{
    auto const m = solves.n_cases();
    if (size < 1 || size > m) {
        throw UsageError("downsample size must be between 1 and the number of cases");
    }
    if (start >= m) {
        throw UsageError("start case out of range");
    }

    CaseSet picked { start };
    std::vector<bool> taken(m, false);
    taken[start] = true;
    std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
    std::vector<Index> ties;
    auto last = start;
    while (picked.size() < size) {
        double best = -1.0;
        ties.clear();
        for (Index c = 0; c < m; ++c) {
            if (taken[c]) {
                continue;
            }
            nearest[c] = std::min(nearest[c], case_distance(solves, c, last));
            if (nearest[c] > best) {
                best = nearest[c];
                ties.assign(1, c);
            } else if (nearest[c] == best) {
                ties.push_back(c);
            }
        }
        last = ties.size() == 1 ? ties.front() : ties[rng.below(ties.size())];
        taken[last] = true;
        picked.push_back(last);
    }
    return picked;
}

auto downsample_mode_name(DownsampleMode mode) -> std::string_view
{
    switch (mode) {
    case DownsampleMode::full: return "full";
    case DownsampleMode::random: return "random";
    case DownsampleMode::informed: return "informed";
    }
    return "unknown";
}

auto parse_downsample_mode(std::string_view name) -> DownsampleMode
{
    for (auto mode : { DownsampleMode::full, DownsampleMode::random, DownsampleMode::informed }) {
        if (downsample_mode_name(mode) == name) {
            return mode;
        }
    }
    throw UsageError("unknown downsample mode '" + std::string(name) + "'");
}

void DownsampleSchedule::validate() const
{
    if (!(ds_rate > 0.0 && ds_rate <= 1.0)) {
        throw UsageError("ds_rate must lie in (0, 1]");
    }
    if (!(parent_rate > 0.0 && parent_rate <= 1.0)) {
        throw UsageError("parent_rate must lie in (0, 1]");
    }
    if (generational_interval < 1) {
        throw UsageError("generational_interval must be at least 1");
    }
    if (!(solve_threshold >= 0.0) || !std::isfinite(solve_threshold)) {
        throw UsageError("solve_threshold must be finite and nonnegative");
    }
}

Downsampler::Downsampler(DownsampleSchedule schedule)
    : schedule_(schedule)
{
    schedule_.validate();
}

auto Downsampler::step(Index generation, Index n_individuals, Index n_cases, FullEvaluator const& evaluate_full,
                       RandomSource& rng) -> ScheduleStep
{
    if (n_individuals < 1 || n_cases < 1) {
        throw UsageError("population and case set must be nonempty");
    }
    ScheduleStep out;
    switch (schedule_.mode) {
    case DownsampleMode::full:
        out.active_cases.resize(n_cases);
        std::iota(out.active_cases.begin(), out.active_cases.end(), Index { 0 });
        break;
    case DownsampleMode::random:
        out.active_cases = random_downsample(n_cases, schedule_.ds_rate, rng);
        break;
    case DownsampleMode::informed:
        if (generation % schedule_.generational_interval == 0 || sample_.empty()) {
            auto const n_parents = sample_size(schedule_.parent_rate, n_individuals);
            auto const parents = uniform_subset(n_individuals, n_parents, rng);
            Matrix const errors = evaluate_full(parents);
            if (static_cast<Index>(errors.rows()) != parents.size() || static_cast<Index>(errors.cols()) != n_cases) {
                throw UsageError("full evaluator returned a matrix of the wrong shape");
            }
            solves_ = SolveMatrix::from_errors(errors, schedule_.solve_threshold);
            sample_ = informed_downsample(*solves_, sample_size(schedule_.ds_rate, n_cases), rng);
            std::sort(sample_.begin(), sample_.end());
            out.cost.parents_sampled = parents.size();
            out.cost.estimation_evaluations = parents.size() * n_cases;
            out.cost.rebuilt = true;
        }
        out.active_cases = sample_;
        break;
    }
    out.cost.population_evaluations = n_individuals * out.active_cases.size();
    return out;
}

} // namespace lexicase
