#include "lexicase/program.hpp"

#include <algorithm>
#include <sstream>

namespace lexicase {

auto arity(Op op) noexcept -> Index
{
    switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
    case Op::logical_and:
    case Op::logical_or: return 2;
    case Op::logical_not: return 1;
    case Op::if_then_else: return 3;
    case Op::variable:
    case Op::constant: return 0;
    }
    return 0;
}

auto op_name(Op op) -> std::string
{
    switch (op) {
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::div: return "div";
    case Op::variable: return "var";
    case Op::constant: return "const";
    case Op::logical_and: return "and";
    case Op::logical_or: return "or";
    case Op::logical_not: return "not";
    case Op::if_then_else: return "if";
    }
    return "?";
}

ExprProgram::ExprProgram(std::vector<Node> prefix)
    : nodes_(std::move(prefix))
{
    if (nodes_.empty()) {
        throw UsageError("program must have at least one node");
    }
    if (subtree_end(0) != nodes_.size()) {
        throw UsageError("prefix sequence does not form a single tree");
    }
}

auto ExprProgram::subtree_end(Index root) const -> Index
{
    if (root >= nodes_.size()) {
        throw UsageError("node index out of range");
    }
    Index open = 1;
    Index j = root;
    while (open > 0) {
        if (j >= nodes_.size()) {
            throw UsageError("prefix sequence is truncated");
        }
        open += arity(nodes_[j].op);
        --open;
        ++j;
    }
    return j;
}

auto ExprProgram::depth() const -> Index
{
    std::vector<Index> stack;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        auto const a = arity(it->op);
        Index deepest = 0;
        for (Index k = 0; k < a; ++k) {
            deepest = std::max(deepest, stack.back());
            stack.pop_back();
        }
        stack.push_back(deepest + 1);
    }
    return stack.empty() ? 0 : stack.back();
}

auto ExprProgram::to_string() const -> std::string
{
    std::ostringstream out;
    auto write = [&](auto&& self, Index i) -> Index {
        auto const& n = nodes_[i];
        if (n.op == Op::variable) {
            out << 'x' << n.variable;
            return i + 1;
        }
        if (n.op == Op::constant) {
            out << format_real(n.value);
            return i + 1;
        }
        out << op_name(n.op) << '(';
        Index next = i + 1;
        for (Index k = 0; k < arity(n.op); ++k) {
            if (k > 0) {
                out << ", ";
            }
            next = self(self, next);
        }
        out << ')';
        return next;
    };
    if (!nodes_.empty()) {
        write(write, 0);
    }
    return out.str();
}

auto random_terminal(PrimitiveSet const& primitives, RandomSource& rng) -> Node
{
    auto const kinds = primitives.terminal_kinds();
    if (kinds == 0) {
        throw UsageError("primitive set has no terminals");
    }
    auto const k = static_cast<Index>(rng.below(kinds));
    if (k < primitives.n_variables) {
        return Node { Op::variable, static_cast<std::uint16_t>(k), 0.0 };
    }
    if (k < primitives.n_variables + primitives.constants.size()) {
        return Node { Op::constant, 0, primitives.constants[k - primitives.n_variables] };
    }
    return Node { Op::constant, 0, rng.uniform(-1.0, 1.0) };
}

namespace {

void grow_into(std::vector<Node>& out, PrimitiveSet const& primitives, Index depth, bool full, RandomSource& rng)
{
    auto const n_functions = primitives.functions.size();
    bool terminal = depth <= 1 || n_functions == 0;
    Index choice = 0;
    if (!terminal) {
        if (full) {
            choice = static_cast<Index>(rng.below(n_functions));
        } else {
            choice = static_cast<Index>(rng.below(n_functions + primitives.terminal_kinds()));
            terminal = choice >= n_functions;
        }
    }
    if (terminal) {
        out.push_back(random_terminal(primitives, rng));
        return;
    }
    auto const op = primitives.functions[choice];
    out.push_back(Node { op, 0, 0.0 });
    for (Index k = 0; k < arity(op); ++k) {
        grow_into(out, primitives, depth - 1, full, rng);
    }
}

void truncate_into(std::vector<Node>& out, std::vector<Node> const& in, Index& i, Index depth, Index max_depth,
                   PrimitiveSet const& primitives, RandomSource& rng)
{
    auto const& n = in[i];
    if (depth >= max_depth && arity(n.op) > 0) {
        // Skip the whole subtree and put a terminal in its place.
        Index open = 1;
        while (open > 0) {
            open += arity(in[i].op);
            --open;
            ++i;
        }
        out.push_back(random_terminal(primitives, rng));
        return;
    }
    out.push_back(n);
    ++i;
    for (Index k = 0; k < arity(n.op); ++k) {
        truncate_into(out, in, i, depth + 1, max_depth, primitives, rng);
    }
}

} // namespace

auto random_tree(PrimitiveSet const& primitives, Index depth, bool full, RandomSource& rng) -> ExprProgram
{
    if (depth < 1) {
        throw UsageError("tree depth must be at least 1");
    }
    if (primitives.terminal_kinds() == 0) {
        throw UsageError("primitive set has no terminals");
    }
    std::vector<Node> nodes;
    grow_into(nodes, primitives, depth, full, rng);
    return ExprProgram(std::move(nodes));
}

auto init_population(PrimitiveSet const& primitives, Index size, RandomSource& rng, Index min_depth, Index max_depth)
    -> std::vector<ExprProgram>
{
    if (size < 2) {
        throw UsageError("population size must be at least 2");
    }
    if (primitives.functions.empty() && primitives.terminal_kinds() == 0) {
        throw UsageError("primitive set is empty");
    }
    if (min_depth < 1 || max_depth < min_depth) {
        throw UsageError("invalid depth ramp");
    }
    auto const ramp = max_depth - min_depth + 1;
    std::vector<ExprProgram> population;
    population.reserve(size);
    for (Index i = 0; i < size; ++i) {
        auto const depth = min_depth + i % ramp;
        bool const full = (i / ramp) % 2 == 0;
        population.push_back(random_tree(primitives, depth, full, rng));
    }
    return population;
}

void VariationRates::validate() const
{
    if (!(crossover >= 0.0 && crossover <= 1.0) || !(mutation >= 0.0 && mutation <= 1.0)) {
        throw UsageError("variation rates must lie in [0, 1]");
    }
    if (max_depth < 1 || mutation_depth < 1) {
        throw UsageError("depth bounds must be at least 1");
    }
}

auto splice(ExprProgram const& into, Index into_point, ExprProgram const& from, Index from_point) -> ExprProgram
{
    auto const into_end = into.subtree_end(into_point);
    auto const from_end = from.subtree_end(from_point);
    auto const& a = into.nodes();
    auto const& b = from.nodes();
    std::vector<Node> nodes;
    nodes.reserve(a.size() - (into_end - into_point) + (from_end - from_point));
    nodes.insert(nodes.end(), a.begin(), a.begin() + static_cast<std::ptrdiff_t>(into_point));
    nodes.insert(nodes.end(), b.begin() + static_cast<std::ptrdiff_t>(from_point), b.begin() + static_cast<std::ptrdiff_t>(from_end));
    nodes.insert(nodes.end(), a.begin() + static_cast<std::ptrdiff_t>(into_end), a.end());
    return ExprProgram(std::move(nodes));
}

auto truncate_depth(ExprProgram const& program, Index max_depth, PrimitiveSet const& primitives, RandomSource& rng)
    -> ExprProgram
{
    if (program.depth() <= max_depth) {
        return program;
    }
    std::vector<Node> nodes;
    Index i = 0;
    truncate_into(nodes, program.nodes(), i, 1, max_depth, primitives, rng);
    return ExprProgram(std::move(nodes));
}

auto subtree_crossover(ExprProgram const& a, ExprProgram const& b, VariationRates const& rates, PrimitiveSet const& primitives,
                       RandomSource& rng) -> ExprProgram
{
    ExprProgram child;
    for (Index attempt = 0; attempt <= rates.retries; ++attempt) {
        auto const pa = static_cast<Index>(rng.below(a.size()));
        auto const pb = static_cast<Index>(rng.below(b.size()));
        child = splice(a, pa, b, pb);
        if (child.depth() <= rates.max_depth) {
            return child;
        }
    }
    return truncate_depth(child, rates.max_depth, primitives, rng);
}

auto subtree_mutation(ExprProgram const& program, VariationRates const& rates, PrimitiveSet const& primitives,
                      RandomSource& rng) -> ExprProgram
{
    ExprProgram child;
    for (Index attempt = 0; attempt <= rates.retries; ++attempt) {
        auto const point = static_cast<Index>(rng.below(program.size()));
        auto const fresh = random_tree(primitives, 1 + static_cast<Index>(rng.below(rates.mutation_depth)), false, rng);
        child = splice(program, point, fresh, 0);
        if (child.depth() <= rates.max_depth) {
            return child;
        }
    }
    return truncate_depth(child, rates.max_depth, primitives, rng);
}

auto vary(std::span<ExprProgram const> parents, VariationRates const& rates, PrimitiveSet const& primitives,
          RandomSource& rng) -> ExprProgram
{
    if (parents.empty()) {
        throw UsageError("vary needs at least one parent");
    }
    ExprProgram child = parents[0];
    if (rng.bernoulli(rates.crossover)) {
        child = subtree_crossover(child, parents[parents.size() > 1 ? 1 : 0], rates, primitives, rng);
    }
    if (rng.bernoulli(rates.mutation)) {
        child = subtree_mutation(child, rates, primitives, rng);
    }
    return child;
}

} // namespace lexicase
