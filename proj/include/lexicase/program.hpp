#ifndef LEXICASE_PROGRAM_HPP
#define LEXICASE_PROGRAM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lexicase/core.hpp"

namespace lexicase {

enum class Op : std::uint8_t {
    add,
    sub,
    mul,
    div, // protected: x / 0 = 1
    variable,
    constant,
    logical_and,
    logical_or,
    logical_not,
    if_then_else,
};

auto arity(Op op) noexcept -> Index;
auto op_name(Op op) -> std::string;

struct Node {
    Op op = Op::constant;
    std::uint16_t variable = 0;
    double value = 0.0;

    friend auto operator==(Node const&, Node const&) -> bool = default;
};

enum class ProblemKind { regression, boolean };

struct PrimitiveSet {
    ProblemKind kind = ProblemKind::regression;
    std::vector<Op> functions;
    Index n_variables = 1;
    std::vector<double> constants; // fixed constant terminals
    bool ephemeral_constants = false; // uniform [-1, 1], drawn at creation and frozen

    // Number of terminal kinds: variables, fixed constants, and one for ephemerals.
    [[nodiscard]] auto terminal_kinds() const noexcept -> Index
    {
        return n_variables + constants.size() + (ephemeral_constants ? 1 : 0);
    }
};

/// Expression tree stored in prefix order.
class ExprProgram {
public:
    ExprProgram() = default;
    explicit ExprProgram(std::vector<Node> prefix);

    [[nodiscard]] auto nodes() const noexcept -> std::vector<Node> const& { return nodes_; }
    [[nodiscard]] auto size() const noexcept -> Index { return nodes_.size(); }
    // Nodes on the longest root-to-leaf path; a lone terminal has depth 1.
    [[nodiscard]] auto depth() const -> Index;
    // One past the last node of the subtree rooted at `root`.
    [[nodiscard]] auto subtree_end(Index root) const -> Index;
    [[nodiscard]] auto to_string() const -> std::string;

    friend auto operator==(ExprProgram const&, ExprProgram const&) -> bool = default;

private:
    std::vector<Node> nodes_;
};

auto random_terminal(PrimitiveSet const& primitives, RandomSource& rng) -> Node;

// Full trees have every leaf at `depth`; grow trees stop early at random.
auto random_tree(PrimitiveSet const& primitives, Index depth, bool full, RandomSource& rng) -> ExprProgram;

// Ramped half-and-half over depths [min_depth, max_depth].
auto init_population(PrimitiveSet const& primitives, Index size, RandomSource& rng, Index min_depth = 2, Index max_depth = 6)
    -> std::vector<ExprProgram>;

struct VariationRates {
    double crossover = 0.9;
    double mutation = 0.1;
    Index max_depth = 10;
    Index mutation_depth = 4;
    Index retries = 3;

    void validate() const;
};

// Subtree at `into_point` of `into` replaced by the subtree at `from_point` of `from`.
auto splice(ExprProgram const& into, Index into_point, ExprProgram const& from, Index from_point) -> ExprProgram;

// Replaces every subtree rooted at the depth bound with a random terminal.
auto truncate_depth(ExprProgram const& program, Index max_depth, PrimitiveSet const& primitives, RandomSource& rng)
    -> ExprProgram;

auto subtree_crossover(ExprProgram const& a, ExprProgram const& b, VariationRates const& rates, PrimitiveSet const& primitives,
                       RandomSource& rng) -> ExprProgram;

auto subtree_mutation(ExprProgram const& program, VariationRates const& rates, PrimitiveSet const& primitives,
                      RandomSource& rng) -> ExprProgram;

/// One offspring from parents[0] (and parents[1] for crossover, if present):
/// crossover with probability rates.crossover, then mutation with probability
/// rates.mutation. Offspring exceeding the depth bound are regenerated up to
/// rates.retries times, then truncated.
auto vary(std::span<ExprProgram const> parents, VariationRates const& rates, PrimitiveSet const& primitives,
          RandomSource& rng) -> ExprProgram;

} // namespace lexicase

#endif
