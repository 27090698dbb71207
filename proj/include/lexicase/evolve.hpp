#ifndef LEXICASE_EVOLVE_HPP
#define LEXICASE_EVOLVE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lexicase/core.hpp"
#include "lexicase/problem.hpp"
#include "lexicase/program.hpp"
#include "lexicase/sampling.hpp"
#include "lexicase/selectors.hpp"

namespace lexicase {

struct RunConfig {
    std::string problem = "parity4";
    Index problem_cases = 0; // 0 = the problem's default size
    Index population_size = 500;
    Index max_generations = 100;
    SelectorConfig selector;
    DownsampleSchedule downsample;
    VariationRates variation;
    std::uint64_t seed = 1;
    bool lazy = false; // partial evaluation during selection (lexicase and weighted only)
    unsigned selection_jobs = 1;

    // Throws ConfigError on inconsistent settings.
    void validate(Problem const& problem) const;
};

struct GenerationRow {
    Index generation = 0;
    double best_error_sum = 0.0;   // over the generation's active cases
    Index best_cases_solved = 0;   // active cases the best individual solves
    Index behavioral_diversity = 0; // distinct error vectors over active cases
    Index active_cases = 0;
    Index generation_evaluations = 0; // population evaluations charged this generation
    Index estimation_evaluations = 0; // informed-downsampling estimation this generation
    Index evaluations = 0;            // cumulative generation + estimation evaluations
    Index verification_evaluations = 0; // cumulative, full-set success checks and lazy-mode telemetry
    std::int64_t selection_ns = 0;
};

struct RunRecord {
    std::vector<GenerationRow> rows;
    bool success = false;
    bool generalization = false;
    std::optional<Index> solution_generation;
    Index total_evaluations = 0;
    std::string solution; // program text of the solving individual, if any
};

/// Generational loop: schedule cases, evaluate, select, vary. No elitism.
/// Stops once some individual solves every training case (checked on the
/// full training set even when downsampling) or after max_generations.
auto run_evolution(RunConfig const& config) -> RunRecord;

// Number of distinct error-vector rows.
auto behavioral_diversity(ErrorMatrix const& matrix) -> Index;

struct SyntheticSpec {
    Index n_individuals = 10;
    std::vector<Index> group_sizes { 1 };  // identical columns per case group
    double noise = 0.0;                    // per-entry flip probability applied to every column
    std::vector<Index> specialist_cases;   // individual k is the unique minimizer of specialist_cases[k]
    Index generalists = 0;                 // rows 0.5 everywhere, never elite
};

/// Binary error matrix with planted structure. Each group's columns copy one
/// base pass/fail column (distinct across groups) before noise. Specialists
/// occupy the first rows: error 0 on their case, 1 everywhere else, and every
/// other row fails their case. Generalists follow with 0.5 on every case.
auto synthetic_matrix(SyntheticSpec const& spec, RandomSource& rng) -> ErrorMatrix;

} // namespace lexicase

#endif
