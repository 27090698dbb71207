#ifndef LEXICASE_PROBLEM_HPP
#define LEXICASE_PROBLEM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexicase/core.hpp"
#include "lexicase/program.hpp"

namespace lexicase {

// Inputs (cases x variables) and targets for a set of fitness cases.
struct CaseData {
    Matrix inputs;
    Vector targets;
    // Boolean problems only: inputs and targets packed 64 cases per word.
    std::vector<std::vector<std::uint64_t>> packed_inputs;
    std::vector<std::uint64_t> packed_targets;

    [[nodiscard]] auto n_cases() const noexcept -> Index { return static_cast<Index>(inputs.rows()); }
};

struct Problem {
    std::string name;
    PrimitiveSet primitives;
    CaseData train;
    CaseData test; // may be empty
    double solve_threshold = 0.0;

    [[nodiscard]] auto kind() const noexcept -> ProblemKind { return primitives.kind; }
    [[nodiscard]] auto n_cases() const noexcept -> Index { return train.n_cases(); }
    [[nodiscard]] auto has_test() const noexcept -> bool { return test.n_cases() > 0; }

    // Training cases restricted to `cases`, in that order.
    [[nodiscard]] auto subset(std::span<Index const> cases) const -> CaseData;
};

auto make_case_data(Matrix inputs, Vector targets, ProblemKind kind) -> CaseData;

// x^4 + x^3 + x^2 + x on n evenly spaced points of [-1, 1]; held-out midpoints for testing.
auto quartic_problem(Index n_train = 20) -> Problem;
// XOR of `bits` inputs (target 1 when the number of set bits is odd).
auto parity_problem(Index bits = 4) -> Problem;
// Multiplexer with `address_bits` address lines (2 -> 6-multiplexer).
auto multiplexer_problem(Index address_bits = 2) -> Problem;
// Target 0 everywhere, with constant 0 among the terminals.
auto constant_problem(Index n_train = 10) -> Problem;

// "quartic", "parity4", "mux6", "constant". n_cases = 0 keeps the default size.
auto make_problem(std::string_view id, Index n_cases = 0) -> Problem;

// Program outputs on every case of `data`.
auto program_outputs(ExprProgram const& program, CaseData const& data, ProblemKind kind) -> Vector;

// Per-case error on every case of `data`: |output - target| for regression, 0/1 mismatch for boolean.
auto program_errors(ExprProgram const& program, CaseData const& data, ProblemKind kind) -> Vector;

// Errors on the listed training cases.
auto evaluate_program(ExprProgram const& program, Problem const& problem, std::span<Index const> cases) -> Vector;

// Error on a single training case.
auto evaluate_case(ExprProgram const& program, Problem const& problem, Index test_case) -> double;

} // namespace lexicase

#endif
