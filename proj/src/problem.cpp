#include "lexicase/problem.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <string>

namespace lexicase {

namespace {

// Error charged when a regression output is not finite (e.g. 1/tiny overflowing).
constexpr double NonFinitePenalty = 1e12;

auto pack_column(Eigen::Ref<Vector const> column) -> std::vector<std::uint64_t>
{
    auto const n = static_cast<Index>(column.size());
    std::vector<std::uint64_t> words((n + 63) / 64, 0);
    for (Index i = 0; i < n; ++i) {
        if (column(static_cast<Eigen::Index>(i)) != 0.0) {
            words[i / 64] |= std::uint64_t { 1 } << (i % 64);
        }
    }
    return words;
}

// Stack height needed to run the program right to left.
auto stack_height(ExprProgram const& program) -> Index
{
    Index height = 0;
    Index peak = 0;
    auto const& nodes = program.nodes();
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
        height = height + 1 - arity(it->op);
        peak = std::max(peak, height);
    }
    return peak;
}

auto regression_outputs(ExprProgram const& program, Matrix const& inputs) -> Vector
{
    auto const n = inputs.rows();
    Eigen::ArrayXXd stack(n, static_cast<Eigen::Index>(stack_height(program)));
    Eigen::Index top = 0;
    auto const& nodes = program.nodes();
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
        switch (it->op) {
        case Op::variable: stack.col(top++) = inputs.col(it->variable).array(); break;
        case Op::constant: stack.col(top++).setConstant(it->value); break;
        case Op::add: stack.col(top - 2) = stack.col(top - 1) + stack.col(top - 2); --top; break;
        case Op::sub: stack.col(top - 2) = stack.col(top - 1) - stack.col(top - 2); --top; break;
        case Op::mul: stack.col(top - 2) = stack.col(top - 1) * stack.col(top - 2); --top; break;
        case Op::div:
            stack.col(top - 2) = (stack.col(top - 2) == 0.0).select(1.0, stack.col(top - 1) / stack.col(top - 2));
            --top;
            break;
        default: throw UsageError("operator " + op_name(it->op) + " is not valid in a regression program");
        }
    }
    return stack.col(0).matrix();
}

auto boolean_words(ExprProgram const& program, CaseData const& data) -> std::vector<std::uint64_t>
{
    auto const words = data.packed_targets.size();
    std::vector<std::uint64_t> stack(stack_height(program) * words, 0);
    Index top = 0;
    auto slot = [&](Index k) { return stack.begin() + static_cast<std::ptrdiff_t>(k * words); };
    auto const& nodes = program.nodes();
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
        switch (it->op) {
        case Op::variable: {
            auto const& bits = data.packed_inputs.at(it->variable);
            std::copy(bits.begin(), bits.end(), slot(top++));
            break;
        }
        case Op::constant: std::fill_n(slot(top++), words, it->value != 0.0 ? ~std::uint64_t { 0 } : 0); break;
        case Op::logical_and:
            for (Index w = 0; w < words; ++w) {
                slot(top - 2)[w] = slot(top - 1)[w] & slot(top - 2)[w];
            }
            --top;
            break;
        case Op::logical_or:
            for (Index w = 0; w < words; ++w) {
                slot(top - 2)[w] = slot(top - 1)[w] | slot(top - 2)[w];
            }
            --top;
            break;
        case Op::logical_not:
            for (Index w = 0; w < words; ++w) {
                slot(top - 1)[w] = ~slot(top - 1)[w];
            }
            break;
        case Op::if_then_else: {
            // Top of stack is the condition, then the two branches.
            auto c = slot(top - 1);
            auto t = slot(top - 2);
            auto e = slot(top - 3);
            for (Index w = 0; w < words; ++w) {
                e[w] = (c[w] & t[w]) | (~c[w] & e[w]);
            }
            top -= 2;
            break;
        }
        default: throw UsageError("operator " + op_name(it->op) + " is not valid in a boolean program");
        }
    }
    return { stack.begin(), stack.begin() + static_cast<std::ptrdiff_t>(words) };
}

auto linspace(Index n, double lo, double hi) -> Vector
{
    if (n == 1) {
        return Vector::Constant(1, lo);
    }
    return Vector::LinSpaced(static_cast<Eigen::Index>(n), lo, hi);
}

auto quartic(Vector const& x) -> Vector
{
    auto const a = x.array();
    return (a * a * a * a + a * a * a + a * a + a).matrix();
}

auto regression_primitives() -> PrimitiveSet
{
    return PrimitiveSet { ProblemKind::regression, { Op::add, Op::sub, Op::mul, Op::div }, 1, {}, true };
}

auto boolean_primitives(Index n_inputs) -> PrimitiveSet
{
    return PrimitiveSet { ProblemKind::boolean,
                          { Op::logical_and, Op::logical_or, Op::logical_not, Op::if_then_else },
                          n_inputs,
                          {},
                          false };
}

auto truth_table(Index n_inputs) -> Matrix
{
    auto const rows = Index { 1 } << n_inputs;
    Matrix inputs(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n_inputs));
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < n_inputs; ++j) {
            inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<double>((i >> j) & 1U);
        }
    }
    return inputs;
}

} // namespace

auto make_case_data(Matrix inputs, Vector targets, ProblemKind kind) -> CaseData
{
    if (inputs.rows() != targets.size()) {
        throw UsageError("inputs and targets disagree on the number of cases");
    }
    CaseData data { std::move(inputs), std::move(targets), {}, {} };
    if (kind == ProblemKind::boolean) {
        for (Eigen::Index j = 0; j < data.inputs.cols(); ++j) {
            data.packed_inputs.push_back(pack_column(data.inputs.col(j)));
        }
        data.packed_targets = pack_column(data.targets);
    }
    return data;
}

auto Problem::subset(std::span<Index const> cases) const -> CaseData
{
    Matrix inputs(static_cast<Eigen::Index>(cases.size()), train.inputs.cols());
    Vector targets(static_cast<Eigen::Index>(cases.size()));
    for (std::size_t j = 0; j < cases.size(); ++j) {
        if (cases[j] >= n_cases()) {
            throw UsageError("case index out of range");
        }
        inputs.row(static_cast<Eigen::Index>(j)) = train.inputs.row(static_cast<Eigen::Index>(cases[j]));
        targets(static_cast<Eigen::Index>(j)) = train.targets(static_cast<Eigen::Index>(cases[j]));
    }
    return make_case_data(std::move(inputs), std::move(targets), kind());
}

auto quartic_problem(Index n_train) -> Problem
{
    if (n_train < 2) {
        throw UsageError("quartic problem needs at least two training points");
    }
    Problem p;
    p.name = "quartic";
    p.primitives = regression_primitives();
    Vector x = linspace(n_train, -1.0, 1.0);
    Vector mid = (x.head(x.size() - 1) + x.tail(x.size() - 1)) / 2.0;
    p.train = make_case_data(x, quartic(x), ProblemKind::regression);
    p.test = make_case_data(mid, quartic(mid), ProblemKind::regression);
    // Absorbs rounding between algebraically equal expressions.
    p.solve_threshold = 1e-9;
    return p;
}

auto parity_problem(Index bits) -> Problem
{
    if (bits < 1 || bits > 16) {
        throw UsageError("parity problem supports 1 to 16 inputs");
    }
    Problem p;
    p.name = "parity" + std::to_string(bits);
    p.primitives = boolean_primitives(bits);
    Matrix inputs = truth_table(bits);
    Vector targets(inputs.rows());
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
        targets(i) = static_cast<double>(std::popcount(static_cast<unsigned>(i)) % 2);
    }
    p.train = make_case_data(std::move(inputs), std::move(targets), ProblemKind::boolean);
    return p;
}

auto multiplexer_problem(Index address_bits) -> Problem
{
    if (address_bits < 1 || address_bits > 3) {
        throw UsageError("multiplexer problem supports 1 to 3 address bits");
    }
    auto const n_inputs = address_bits + (Index { 1 } << address_bits);
    Problem p;
    p.name = "mux" + std::to_string(n_inputs);
    p.primitives = boolean_primitives(n_inputs);
    Matrix inputs = truth_table(n_inputs);
    Vector targets(inputs.rows());
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
        auto const row = static_cast<Index>(i);
        auto const address = row & ((Index { 1 } << address_bits) - 1);
        targets(i) = static_cast<double>((row >> (address_bits + address)) & 1U);
    }
    p.train = make_case_data(std::move(inputs), std::move(targets), ProblemKind::boolean);
    return p;
}

auto constant_problem(Index n_train) -> Problem
{
    if (n_train < 1) {
        throw UsageError("constant problem needs at least one training point");
    }
    Problem p;
    p.name = "constant";
    p.primitives = regression_primitives();
    p.primitives.constants = { 0.0 };
    Vector x = linspace(n_train, -1.0, 1.0);
    p.train = make_case_data(x, Vector::Zero(x.size()), ProblemKind::regression);
    return p;
}

auto make_problem(std::string_view id, Index n_cases) -> Problem
{
    if (id == "quartic") {
        return quartic_problem(n_cases == 0 ? 20 : n_cases);
    }
    if (id == "constant") {
        return constant_problem(n_cases == 0 ? 10 : n_cases);
    }
    if (n_cases != 0) {
        throw UsageError("problem '" + std::string(id) + "' has a fixed number of cases");
    }
    if (id == "parity4") {
        return parity_problem(4);
    }
    if (id == "mux6") {
        return multiplexer_problem(2);
    }
    throw UsageError("unknown problem '" + std::string(id) + "'");
}

auto program_outputs(ExprProgram const& program, CaseData const& data, ProblemKind kind) -> Vector
{
    if (kind == ProblemKind::regression) {
        return regression_outputs(program, data.inputs);
    }
    auto const words = boolean_words(program, data);
    Vector out(data.inputs.rows());
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        auto const k = static_cast<Index>(i);
        out(i) = static_cast<double>((words[k / 64] >> (k % 64)) & 1U);
    }
    return out;
}

auto program_errors(ExprProgram const& program, CaseData const& data, ProblemKind kind) -> Vector
{
    if (kind == ProblemKind::regression) {
        Vector err = (regression_outputs(program, data.inputs) - data.targets).cwiseAbs();
        return err.unaryExpr([](double e) { return std::isfinite(e) ? e : NonFinitePenalty; });
    }
    auto const words = boolean_words(program, data);
    Vector err(data.inputs.rows());
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        auto const k = static_cast<Index>(i);
        err(i) = static_cast<double>(((words[k / 64] ^ data.packed_targets[k / 64]) >> (k % 64)) & 1U);
    }
    return err;
}

auto evaluate_program(ExprProgram const& program, Problem const& problem, std::span<Index const> cases) -> Vector
{
    return program_errors(program, problem.subset(cases), problem.kind());
}

auto evaluate_case(ExprProgram const& program, Problem const& problem, Index test_case) -> double
{
    std::array<Index, 1> const one { test_case };
    return evaluate_program(program, problem, one)(0);
}

} // namespace lexicase
