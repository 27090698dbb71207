#include "lexicase/evolve.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>

#include "lexicase/lazy.hpp"

namespace lexicase {

namespace {

auto active_size(DownsampleSchedule const& schedule, Index n_cases) -> Index
{
    return schedule.mode == DownsampleMode::full ? n_cases : sample_size(schedule.ds_rate, n_cases);
}

auto errors_on(std::vector<ExprProgram> const& population, CaseData const& data, ProblemKind kind) -> Matrix
{
    Matrix errs(static_cast<Eigen::Index>(population.size()), static_cast<Eigen::Index>(data.n_cases()));
    for (std::size_t i = 0; i < population.size(); ++i) {
        errs.row(static_cast<Eigen::Index>(i)) = program_errors(population[i], data, kind).transpose();
    }
    return errs;
}

auto solves_all(Eigen::Ref<Vector const> errors, double threshold) -> bool
{
    return (errors.array() <= threshold).all();
}

} // namespace

void RunConfig::validate(Problem const& problem) const
{
    try {
        if (population_size < 2) {
            throw ConfigError("population_size must be at least 2");
        }
        variation.validate();
        selector.validate();
        downsample.validate();
        auto const active = active_size(downsample, problem.n_cases());
        if (selector.variant == Variant::batch && selector.batch_size > active) {
            throw ConfigError("batch_size " + std::to_string(selector.batch_size) + " exceeds the "
                              + std::to_string(active) + " active cases per generation");
        }
        if (selector.variant == Variant::weighted && selector.weight_metric == WeightMetric::user
            && static_cast<Index>(selector.user_weights.size()) != problem.n_cases()) {
            throw ConfigError("user weights need one entry per training case");
        }
        if (lazy) {
            bool const supported = selector.variant == Variant::lexicase
                || (selector.variant == Variant::weighted && selector.weight_metric != WeightMetric::failure_rate);
            if (!supported) {
                throw ConfigError("lazy evaluation supports lexicase and weighted (uniform or user weights) selection only");
            }
        }
    } catch (UsageError const& e) {
        throw ConfigError(e.what());
    }
}

auto behavioral_diversity(ErrorMatrix const& matrix) -> Index
{
    return distinct_rows(matrix.values());
}

auto run_evolution(RunConfig const& config) -> RunRecord
{
    Problem problem;
    try {
        problem = make_problem(config.problem, config.problem_cases);
    } catch (UsageError const& e) {
        throw ConfigError(e.what());
    }
    config.validate(problem);

    auto const n = config.population_size;
    auto const n_cases = problem.n_cases();
    auto const kind = problem.kind();
    auto const threshold = problem.solve_threshold;

    RandomSource const base(config.seed);
    auto init_rng = base.derive(0);
    auto population = init_population(problem.primitives, n, init_rng);
    auto schedule = config.downsample;
    if (schedule.solve_threshold == 0.0) {
        // Unset: count a case as solved under the problem's own threshold.
        schedule.solve_threshold = threshold;
    }
    Downsampler downsampler(schedule);

    RunRecord record;
    Index cumulative = 0;
    Index verification = 0;

    for (Index generation = 0;; ++generation) {
        auto const gen_rng = base.derive(generation + 1);
        auto schedule_rng = gen_rng.derive(0);
        auto const selection_rng = gen_rng.derive(1);
        auto const variation_rng = gen_rng.derive(2);

        FullEvaluator const evaluate_full = [&](std::span<Index const> members) {
            Matrix errs(static_cast<Eigen::Index>(members.size()), static_cast<Eigen::Index>(n_cases));
            for (std::size_t k = 0; k < members.size(); ++k) {
                errs.row(static_cast<Eigen::Index>(k)) = program_errors(population[members[k]], problem.train, kind).transpose();
            }
            return errs;
        };
        auto const step = downsampler.step(generation, n, n_cases, evaluate_full, schedule_rng);
        auto const& active = step.active_cases;
        bool const full_set = active.size() == n_cases;
        auto const data = full_set ? problem.train : problem.subset(active);

        ErrorMatrix const errors(errors_on(population, data, kind));
        if (config.lazy) {
            // Telemetry needs the whole active table; lazy selection pays separately below.
            verification += n * active.size();
        }

        GenerationRow row;
        row.generation = generation;
        row.active_cases = active.size();
        row.estimation_evaluations = step.cost.estimation_evaluations;
        row.behavioral_diversity = behavioral_diversity(errors);

        Vector const sums = errors.values().rowwise().sum();
        Eigen::Index best = 0;
        row.best_error_sum = sums.minCoeff(&best);
        row.best_cases_solved = static_cast<Index>((errors.row(static_cast<Index>(best)).array() <= threshold).count());

        std::optional<Index> solver;
        for (Index i = 0; i < n && !solver; ++i) {
            if (!solves_all(errors.row(i).transpose(), threshold)) {
                continue;
            }
            if (full_set) {
                solver = i;
            } else {
                verification += n_cases;
                if (solves_all(program_errors(population[i], problem.train, kind), threshold)) {
                    solver = i;
                }
            }
        }

        bool const stop = solver.has_value() || generation >= config.max_generations;
        Index selection_cost = config.lazy ? 0 : step.cost.population_evaluations;

        std::vector<Index> parents;
        if (!stop) {
            auto const t0 = std::chrono::steady_clock::now();
            CaseSet local(active.size());
            std::iota(local.begin(), local.end(), Index { 0 });
            SelectorConfig selector = config.selector;
            if (selector.weight_metric == WeightMetric::user && selector.user_weights.size() > 0) {
                Vector gathered(static_cast<Eigen::Index>(active.size()));
                for (std::size_t j = 0; j < active.size(); ++j) {
                    gathered(static_cast<Eigen::Index>(j)) = selector.user_weights(static_cast<Eigen::Index>(active[j]));
                }
                selector.user_weights = gathered;
            }
            if (config.lazy) {
                std::vector<CaseData> single;
                single.reserve(active.size());
                for (auto c : active) {
                    std::array<Index, 1> const one { c };
                    single.push_back(problem.subset(one));
                }
                LazyEvaluator evaluator(n, active.size(), [&](Index i, Index j) {
                    return program_errors(population[i], single[j], kind)(0);
                });
                std::vector<double> weights;
                if (selector.variant == Variant::weighted) {
                    weights = selector.weight_metric == WeightMetric::user
                        ? std::vector<double>(selector.user_weights.begin(), selector.user_weights.end())
                        : std::vector<double>(active.size(), 1.0);
                }
                parents.resize(2 * n);
                for (Index e = 0; e < parents.size(); ++e) {
                    auto stream = selection_rng.derive(e);
                    parents[e] = weights.empty() ? lazy_lexicase_select(evaluator, local, stream).winner
                                                 : lazy_lexicase_select(evaluator, local, weights, stream).winner;
                }
                selection_cost = evaluator.cells_evaluated();
            } else {
                parents = select_parents(errors, local, selector, 2 * n, selection_rng, config.selection_jobs, false).parents;
            }
            row.selection_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
        }

        row.generation_evaluations = selection_cost;
        cumulative += selection_cost + step.cost.estimation_evaluations;
        row.evaluations = cumulative;
        row.verification_evaluations = verification;
        record.rows.push_back(row);

        if (solver) {
            auto const& winner = population[*solver];
            record.success = true;
            record.solution_generation = generation;
            record.solution = winner.to_string();
            record.generalization = !problem.has_test() || solves_all(program_errors(winner, problem.test, kind), threshold);
        }
        if (stop) {
            break;
        }

        std::vector<ExprProgram> offspring;
        offspring.reserve(n);
        for (Index i = 0; i < n; ++i) {
            std::array<ExprProgram, 2> const pair { population[parents[2 * i]], population[parents[2 * i + 1]] };
            auto stream = variation_rng.derive(i);
            offspring.push_back(vary(pair, config.variation, problem.primitives, stream));
        }
        population = std::move(offspring);
    }

    record.total_evaluations = cumulative;
    return record;
}

auto synthetic_matrix(SyntheticSpec const& spec, RandomSource& rng) -> ErrorMatrix
{
    auto const n = spec.n_individuals;
    if (n < 1 || spec.group_sizes.empty()) {
        throw UsageError("synthetic matrix needs individuals and at least one case group");
    }
    if (!(spec.noise >= 0.0 && spec.noise <= 1.0)) {
        throw UsageError("noise must lie in [0, 1]");
    }
    Index n_cases = 0;
    for (auto g : spec.group_sizes) {
        if (g < 1) {
            throw UsageError("case groups must be nonempty");
        }
        n_cases += g;
    }
    auto const n_specialists = spec.specialist_cases.size();
    if (n_specialists + spec.generalists > n) {
        throw UsageError("more planted specialists and generalists than individuals");
    }
    std::set<Index> planted;
    for (auto c : spec.specialist_cases) {
        if (c >= n_cases) {
            throw UsageError("specialist case out of range");
        }
        if (!planted.insert(c).second) {
            throw UsageError("two specialists planted on the same case");
        }
    }
    auto const first_regular = n_specialists + spec.generalists;
    if (spec.generalists > 0 && first_regular >= n) {
        throw UsageError("generalists need at least one regular individual to stay non-elite");
    }

    auto const rows = static_cast<Eigen::Index>(n);
    Matrix errors(rows, static_cast<Eigen::Index>(n_cases));
    std::vector<std::string> case_labels;
    std::vector<Vector> bases;
    Eigen::Index col = 0;
    for (std::size_t g = 0; g < spec.group_sizes.size(); ++g) {
        Vector base(rows);
        bool fresh = false;
        for (int attempt = 0; attempt < 1000 && !fresh; ++attempt) {
            for (Eigen::Index i = 0; i < rows; ++i) {
                base(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
            }
            bool const mixed = n < 2 || (base.minCoeff() == 0.0 && base.maxCoeff() == 1.0);
            fresh = mixed && std::none_of(bases.begin(), bases.end(), [&](Vector const& b) { return b == base; });
        }
        if (!fresh) {
            throw UsageError("too few individuals to give every case group a distinct pass/fail pattern");
        }
        bases.push_back(base);
        for (Index k = 0; k < spec.group_sizes[g]; ++k, ++col) {
            errors.col(col) = base;
            for (Eigen::Index i = 0; i < rows; ++i) {
                if (spec.noise > 0.0 && rng.bernoulli(spec.noise)) {
                    errors(i, col) = 1.0 - errors(i, col);
                }
            }
            case_labels.push_back("g" + std::to_string(g) + "c" + std::to_string(k));
        }
    }

    for (std::size_t s = 0; s < n_specialists; ++s) {
        auto const row = static_cast<Eigen::Index>(s);
        auto const c = static_cast<Eigen::Index>(spec.specialist_cases[s]);
        errors.col(c).setOnes();
        errors.row(row).setOnes();
        errors(row, c) = 0.0;
    }
    for (Index k = 0; k < spec.generalists; ++k) {
        errors.row(static_cast<Eigen::Index>(n_specialists + k)).setConstant(0.5);
    }
    if (spec.generalists > 0) {
        // Keep every case solvable by some regular individual so generalists are never elite.
        for (Eigen::Index c = 0; c < errors.cols(); ++c) {
            if (planted.count(static_cast<Index>(c)) != 0) {
                continue;
            }
            auto regular = errors.col(c).tail(rows - static_cast<Eigen::Index>(first_regular));
            if (regular.minCoeff() > 0.0) {
                regular(static_cast<Eigen::Index>(rng.below(n - first_regular))) = 0.0;
            }
        }
    }

    std::vector<std::string> individual_labels;
    for (Index i = 0; i < n; ++i) {
        individual_labels.push_back(i < n_specialists ? "s" + std::to_string(i)
                                        : i < first_regular ? "g" + std::to_string(i - n_specialists)
                                                            : "i" + std::to_string(i));
    }
    return ErrorMatrix(std::move(errors), std::move(individual_labels), std::move(case_labels));
}

} // namespace lexicase
