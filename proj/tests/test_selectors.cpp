#include <doctest.h>

#include "lexicase/probability.hpp"
#include "lexicase/selectors.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace lexicase;

namespace {

auto frequencies(Index n, int trials, std::function<Index(RandomSource&)> const& pick, std::uint64_t seed = 1)
    -> std::vector<double>
{
    std::vector<double> f(n, 0.0);
    RandomSource const base(seed);
    for (int t = 0; t < trials; ++t) {
        auto stream = base.derive(static_cast<std::uint64_t>(t));
        f[pick(stream)] += 1.0 / trials;
    }
    return f;
}

void check_trace(ErrorMatrix const& m, SelectionTrace const& t)
{
    CHECK(t.cases_consumed <= t.ordering.size());
    CHECK(t.pool_sizes.size() == t.cases_consumed);
    for (std::size_t k = 1; k < t.pool_sizes.size(); ++k) {
        CHECK(t.pool_sizes[k] <= t.pool_sizes[k - 1]);
    }
    if (!t.pool_sizes.empty()) {
        CHECK(t.pool_sizes.front() <= m.n_individuals());
        CHECK(t.pool_sizes.back() == t.final_tie_size);
    }
    CHECK(t.final_tie_size >= 1);
}

} // namespace

TEST_CASE("lexicase examples")
{
    auto const abc = ErrorMatrix::from_rows({ { 0, 2 }, { 2, 0 }, { 1, 1 } });
    auto const cases = abc.all_cases();
    auto const f = frequencies(3, 20000, [&](RandomSource& r) { return lexicase_select(abc, cases, r).winner; });
    CHECK(std::abs(f[0] - 0.5) < 0.02);
    CHECK(std::abs(f[1] - 0.5) < 0.02);
    CHECK(f[2] == 0.0);

    auto const ab = ErrorMatrix::from_rows({ { 0, 5 }, { 0, 3 } });
    RandomSource rng(4);
    for (int t = 0; t < 100; ++t) {
        CHECK(lexicase_select(ab, ab.all_cases(), rng).winner == 1);
    }

    auto const same = ErrorMatrix::from_rows({ { 0, 0 }, { 0, 0 } });
    auto const g = frequencies(2, 20000, [&](RandomSource& r) { return lexicase_select(same, same.all_cases(), r).winner; });
    CHECK(std::abs(g[0] - 0.5) < 0.02);

    std::vector<Index> const none;
    CHECK_THROWS_AS(lexicase_select(abc, none, rng), UsageError);
    std::vector<Index> const out_of_range { 5 };
    CHECK_THROWS_AS(lexicase_select(abc, out_of_range, rng), UsageError);
}

TEST_CASE("lexicase winners are elite on the first case and traces are consistent")
{
    RandomSource gen(17);
    for (int trial = 0; trial < 300; ++trial) {
        auto const rows = support::random_rows(gen, 6, 5);
        auto const m = ErrorMatrix::from_rows(rows);
        auto const cases = m.all_cases();
        auto const s = lexicase_select(m, cases, gen);
        check_trace(m, s.trace);
        CHECK(s.trace.winner == s.winner);
        auto const first = s.trace.ordering.front();
        CHECK(m(s.winner, first) == m.column(first).minCoeff());
    }
}

TEST_CASE("epsilon lexicase")
{
    RandomSource gen(23);
    for (int trial = 0; trial < 200; ++trial) {
        auto const m = ErrorMatrix::from_rows(support::random_rows(gen, 5, 4));
        auto const cases = m.all_cases();
        std::vector<double> const zeros(m.n_cases(), 0.0);
        auto const seed = gen();
        RandomSource r1(seed);
        RandomSource r2(seed);
        auto const plain = lexicase_select(m, cases, r1);
        auto const eps = epsilon_lexicase_select(m, cases, zeros, r2);
        CHECK(plain.winner == eps.winner);
        CHECK(plain.trace == eps.trace);
    }

    auto const col = ErrorMatrix::from_rows({ { 0.0 }, { 0.05 }, { 0.3 } });
    std::vector<double> const e { 0.15 };
    auto const f = frequencies(3, 20000, [&](RandomSource& r) { return epsilon_lexicase_select(col, col.all_cases(), e, r).winner; });
    CHECK(std::abs(f[0] - 0.5) < 0.02);
    CHECK(f[2] == 0.0);

    auto const single = ErrorMatrix::from_rows({ { 3, 4 } });
    std::vector<double> const e2 { 0.0, 0.0 };
    RandomSource rng(1);
    auto const s = epsilon_lexicase_select(single, single.all_cases(), e2, rng);
    CHECK(s.winner == 0);
    CHECK(s.trace.cases_consumed <= 1);

    std::vector<double> const negative { -1.0, 0.0 };
    CHECK_THROWS_AS(epsilon_lexicase_select(single, single.all_cases(), negative, rng), UsageError);
    std::vector<double> const missing { 0.0 };
    CHECK_THROWS_AS(epsilon_lexicase_select(single, single.all_cases(), missing, rng), UsageError);
}

TEST_CASE("batch lexicase")
{
    auto const abc = ErrorMatrix::from_rows({ { 0, 2 }, { 2, 0 }, { 1, 1 } });
    auto const f = frequencies(3, 20000, [&](RandomSource& r) { return batch_lexicase_select(abc, abc.all_cases(), 1, r).winner; });
    CHECK(oracle::tv(f, { 0.5, 0.5, 0.0 }) < 0.02);

    // Fixed partition {c0,c1},{c2,c3}: batch means A=(0,4), B=(2,0).
    auto const ab = ErrorMatrix::from_rows({ { 0, 0, 4, 4 }, { 2, 2, 0, 0 } });
    std::vector<Index> const order_a { 0, 1, 2, 3 };
    std::vector<Index> const order_b { 2, 3, 0, 1 };
    CHECK(batch_filter(ab, order_a, 2).pool == Pool { 0 });
    CHECK(batch_filter(ab, order_b, 2).pool == Pool { 1 });
    auto const g = frequencies(2, 20000, [&](RandomSource& r) { return batch_lexicase_select(ab, ab.all_cases(), 2, r).winner; });
    CHECK(oracle::tv(g, oracle::batch({ { 0, 0, 4, 4 }, { 2, 2, 0, 0 } }, 2)) < 0.02);

    // A single batch selects a minimizer of mean error.
    auto const mean = ErrorMatrix::from_rows({ { 0, 9 }, { 4, 4 }, { 4, 4 }, { 9, 0 } });
    RandomSource rng(2);
    for (int t = 0; t < 100; ++t) {
        auto const w = batch_lexicase_select(mean, mean.all_cases(), 2, rng).winner;
        CHECK((w == 1 || w == 2));
    }
    CHECK_THROWS_AS(batch_lexicase_select(mean, mean.all_cases(), 0, rng), UsageError);
    CHECK_THROWS_AS(batch_lexicase_select(mean, mean.all_cases(), 3, rng), UsageError);
}

TEST_CASE("weighted lexicase")
{
    auto const ab = ErrorMatrix::from_rows({ { 0, 2 }, { 2, 0 } });
    RandomSource rng(6);
    std::vector<double> const w10 { 1.0, 0.0 };
    std::vector<double> const w01 { 0.0, 1.0 };
    for (int t = 0; t < 100; ++t) {
        CHECK(weighted_lexicase_select(ab, ab.all_cases(), w10, rng).winner == 0);
        CHECK(weighted_lexicase_select(ab, ab.all_cases(), w01, rng).winner == 1);
    }

    oracle::Rows const rows { { 0, 1, 2, 0 }, { 1, 0, 0, 2 }, { 2, 2, 1, 0 }, { 0, 0, 3, 3 }, { 1, 1, 1, 1 } };
    auto const m = ErrorMatrix::from_rows(rows);
    std::vector<double> const uniform(4, 1.0);
    auto const f = frequencies(5, 50000, [&](RandomSource& r) { return weighted_lexicase_select(m, m.all_cases(), uniform, r).winner; });
    auto const g = frequencies(5, 50000, [&](RandomSource& r) { return lexicase_select(m, m.all_cases(), r).winner; }, 2);
    CHECK(oracle::tv(f, g) < 0.02);

    std::vector<double> const skew { 5.0, 1.0, 1.0, 0.5 };
    auto const h = frequencies(5, 50000, [&](RandomSource& r) { return weighted_lexicase_select(m, m.all_cases(), skew, r).winner; });
    CHECK(oracle::tv(h, oracle::weighted(rows, { 5.0, 1.0, 1.0, 0.5 })) < 0.015);
}

TEST_CASE("baselines")
{
    auto const ab = ErrorMatrix::from_rows({ { 0, 0 }, { 9, 9 } });
    SelectorConfig t2;
    t2.variant = Variant::tournament;
    t2.tournament_size = 2;
    auto const f = frequencies(2, 40000, [&](RandomSource& r) { return baseline_select(ab, ab.all_cases(), t2, r); });
    CHECK(std::abs(f[0] - 0.75) < 0.01);

    auto const three = ErrorMatrix::from_rows({ { 0 }, { 4 }, { 9 } });
    SelectorConfig t1;
    t1.variant = Variant::tournament;
    t1.tournament_size = 1;
    auto const g = frequencies(3, 30000, [&](RandomSource& r) { return baseline_select(three, three.all_cases(), t1, r); });
    CHECK(oracle::tv(g, { 1.0 / 3, 1.0 / 3, 1.0 / 3 }) < 0.015);

    auto const fp_m = ErrorMatrix::from_rows({ { 0, 0 }, { 1, 1 } });
    SelectorConfig fp;
    fp.variant = Variant::fitness_proportionate;
    auto const h = frequencies(2, 40000, [&](RandomSource& r) { return baseline_select(fp_m, fp_m.all_cases(), fp, r); });
    CHECK(std::abs(h[0] - 2.0 / 3) < 0.01);

    SelectorConfig u;
    u.variant = Variant::uniform_random;
    auto const k = frequencies(3, 30000, [&](RandomSource& r) { return baseline_select(three, three.all_cases(), u, r); });
    CHECK(oracle::tv(k, { 1.0 / 3, 1.0 / 3, 1.0 / 3 }) < 0.015);

    // Tied entrants are broken uniformly.
    auto const tie = ErrorMatrix::from_rows({ { 1 }, { 1 } });
    SelectorConfig big;
    big.variant = Variant::tournament;
    big.tournament_size = 5;
    auto const q = frequencies(2, 20000, [&](RandomSource& r) { return baseline_select(tie, tie.all_cases(), big, r); });
    CHECK(std::abs(q[0] - 0.5) < 0.02);

    SelectorConfig lex;
    RandomSource rng(1);
    CHECK_THROWS_AS(baseline_select(ab, ab.all_cases(), lex, rng), UsageError);
}

TEST_CASE("selector config validation and names")
{
    SelectorConfig c;
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.tournament_size = 0;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.epsilon_source = EpsilonSource::fixed;
    c.epsilon_value = -0.5;
    CHECK_THROWS_AS(c.validate(), UsageError);
    c = {};
    c.alpha = 0.0;
    c.variant = Variant::plexicase;
    CHECK_THROWS_AS(c.validate(), UsageError);

    for (auto v : { Variant::lexicase, Variant::epsilon, Variant::batch, Variant::weighted, Variant::plexicase,
                    Variant::tournament, Variant::fitness_proportionate, Variant::uniform_random }) {
        CHECK(parse_variant(variant_name(v)) == v);
    }
    CHECK_THROWS_AS(parse_variant("roulette"), UsageError);
}

TEST_CASE("select_parents")
{
    auto const abc = ErrorMatrix::from_rows({ { 0, 2 }, { 2, 0 }, { 1, 1 } });
    auto const cases = abc.all_cases();
    SelectorConfig config;
    RandomSource const rng(77);

    auto const one = select_parents(abc, cases, config, 1, rng);
    auto stream = rng.derive(0);
    CHECK(one.parents == std::vector<Index> { lexicase_select(abc, cases, stream).winner });

    auto const many = select_parents(abc, cases, config, 1000, rng);
    std::vector<double> f(3, 0.0);
    for (auto p : many.parents) {
        f[p] += 1.0 / 1000;
    }
    CHECK(std::abs(f[0] - 0.5) < 0.03);
    CHECK(std::abs(f[1] - 0.5) < 0.03);
    CHECK(f[2] == 0.0);
    CHECK(many.traces.size() == 1000);

    auto const again = select_parents(abc, cases, config, 1000, rng);
    CHECK(again.parents == many.parents);
    CHECK(again.traces == many.traces);

    for (auto v : { Variant::lexicase, Variant::epsilon, Variant::batch, Variant::weighted, Variant::plexicase,
                    Variant::tournament, Variant::fitness_proportionate, Variant::uniform_random }) {
        SelectorConfig c;
        c.variant = v;
        c.weight_metric = WeightMetric::failure_rate;
        auto const serial = select_parents(abc, cases, c, 257, rng, 1);
        auto const parallel = select_parents(abc, cases, c, 257, rng, 8);
        CHECK(serial.parents == parallel.parents);
        CHECK(serial.traces == parallel.traces);
    }
    CHECK_THROWS_AS(select_parents(abc, cases, config, 0, rng), UsageError);
}

TEST_CASE("failure-rate weights")
{
    auto const m = ErrorMatrix::from_rows({ { 0, 1, 0 }, { 1, 1, 0 }, { 0, 1, 0 }, { 0, 0, 0 } });
    auto const w = failure_rate_weights(m, m.all_cases());
    CHECK(w(0) == 0.25);
    CHECK(w(1) == 0.75);
    CHECK(w(2) == 0.0);

    // Every case solved by everyone: falls back to uniform ordering.
    auto const solved = ErrorMatrix::from_rows({ { 0, 0 }, { 0, 0 } });
    SelectorConfig c;
    c.variant = Variant::weighted;
    c.weight_metric = WeightMetric::failure_rate;
    auto const prepared = prepare_selector(solved, solved.all_cases(), c);
    CHECK(prepared.weights(0) == 1.0);
    CHECK(prepared.weights(1) == 1.0);
}
