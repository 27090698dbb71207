#include <doctest.h>

#include <map>
#include <sstream>

#include "lexicase/core.hpp"
#include "oracle.hpp"

using namespace lexicase;

TEST_CASE("error matrix validates its contents")
{
    CHECK_THROWS_AS(ErrorMatrix { Matrix(0, 2) }, UsageError);
    CHECK_THROWS_AS(ErrorMatrix { Matrix(2, 0) }, UsageError);
    Matrix bad(1, 2);
    bad << 0.0, -1.0;
    CHECK_THROWS_AS(ErrorMatrix { bad }, UsageError);
    bad << 0.0, std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(ErrorMatrix { bad }, UsageError);
    bad << 0.0, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ErrorMatrix { bad }, UsageError);
    CHECK_THROWS_AS(ErrorMatrix::from_rows({ { 0, 1 }, { 2 } }), UsageError);

    auto const m = ErrorMatrix::from_rows({ { 0, 5 }, { 0, 3 } });
    CHECK(m.n_individuals() == 2);
    CHECK(m.n_cases() == 2);
    CHECK(m(1, 1) == 3.0);
    CHECK(m.individual_labels().size() == 2);
    CHECK(m.case_labels().size() == 2);
}

TEST_CASE("elite survivors")
{
    auto const m = ErrorMatrix::from_rows({ { 0, 5 }, { 0, 3 } });
    Pool const both { 0, 1 };
    CHECK(elite_survivors(m, both, 0, 0.0) == Pool { 0, 1 });
    CHECK(elite_survivors(m, both, 1, 0.0) == Pool { 1 });
    CHECK(elite_survivors(m, Pool { 0 }, 1, 0.0) == Pool { 0 });
    CHECK(elite_survivors(m, both, 1, 2.0) == Pool { 0, 1 });
    CHECK_THROWS_AS(elite_survivors(m, both, 2, 0.0), UsageError);
    CHECK_THROWS_AS(elite_survivors(m, both, 0, -1.0), UsageError);
    CHECK_THROWS_AS(elite_survivors(m, Pool {}, 0, 0.0), UsageError);

    auto const col = ErrorMatrix::from_rows({ { 0.0 }, { 0.05 }, { 0.3 } });
    CHECK(elite_survivors(col, Pool { 0, 1, 2 }, 0, 0.05) == Pool { 0, 1 });
    // Input order is preserved.
    CHECK(elite_survivors(col, Pool { 1, 0, 2 }, 0, 0.05) == Pool { 1, 0 });
}

TEST_CASE("median and MAD")
{
    CHECK(median({ 3, 1, 2 }) == 2.0);
    CHECK(median({ 4, 1, 2, 3 }) == 2.5);

    auto const m = ErrorMatrix::from_rows({ { 0.0, 7, 0 }, { 0.05, 7, 1 }, { 0.3, 7, 0 }, { 1.0, 7, 1 } });
    auto const eps = mad_epsilons(m);
    CHECK(eps(0) == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(eps(0) == oracle::mad({ 0.0, 0.05, 0.3, 1.0 }));
    CHECK(eps(1) == 0.0);
    CHECK(eps(2) == 0.5);

    auto const two = ErrorMatrix::from_rows({ { 0 }, { 1 } });
    CHECK(mad_epsilons(two)(0) == 0.5);

    std::vector<Index> const some { 2 };
    auto const partial = mad_epsilons(m, some);
    CHECK(partial(0) == 0.0);
    CHECK(partial(2) == 0.5);
}

TEST_CASE("epsilon survivors are invariant under per-case rescaling")
{
    RandomSource rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        Matrix v(6, 3);
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            v(i) = rng.uniform(0.0, 3.0);
        }
        Matrix scaled = v;
        std::vector<double> factors;
        for (Eigen::Index c = 0; c < v.cols(); ++c) {
            factors.push_back(rng.uniform(0.01, 100.0));
            scaled.col(c) *= factors.back();
        }
        ErrorMatrix const a(v);
        ErrorMatrix const b(scaled);
        auto const ea = mad_epsilons(a);
        auto const eb = mad_epsilons(b);
        Pool const pool { 0, 1, 2, 3, 4, 5 };
        for (Index c = 0; c < 3; ++c) {
            CHECK(elite_survivors(a, pool, c, ea(static_cast<Eigen::Index>(c)))
                  == elite_survivors(b, pool, c, eb(static_cast<Eigen::Index>(c))));
        }
    }
}

TEST_CASE("uniform shuffle")
{
    std::vector<Index> const cases { 0, 1 };
    RandomSource rng(3);
    int first_zero = 0;
    for (int t = 0; t < 10000; ++t) {
        auto const o = shuffled_order(cases, rng);
        REQUIRE(o.size() == 2);
        first_zero += o[0] == 0 ? 1 : 0;
    }
    CHECK(first_zero / 10000.0 == doctest::Approx(0.5).epsilon(0.04));

    std::vector<Index> const many { 4, 9, 2, 7, 1 };
    for (int t = 0; t < 100; ++t) {
        auto o = shuffled_order(many, rng);
        std::sort(o.begin(), o.end());
        CHECK(o == std::vector<Index> { 1, 2, 4, 7, 9 });
    }
}

TEST_CASE("weighted shuffle")
{
    std::vector<Index> const cases { 0, 1 };
    RandomSource rng(5);
    std::vector<double> const one_zero { 1.0, 0.0 };
    for (int t = 0; t < 200; ++t) {
        CHECK(shuffled_order(cases, one_zero, rng) == CaseOrdering { 0, 1 });
    }

    std::vector<double> const equal { 2.0, 2.0 };
    int first_zero = 0;
    for (int t = 0; t < 10000; ++t) {
        first_zero += shuffled_order(cases, equal, rng)[0] == 0 ? 1 : 0;
    }
    CHECK(std::abs(first_zero / 10000.0 - 0.5) < 0.02);

    // P(first = c) = w_c / sum w.
    std::vector<Index> const three { 0, 1, 2 };
    std::vector<double> const w { 1.0, 2.0, 5.0 };
    std::map<Index, int> firsts;
    for (int t = 0; t < 40000; ++t) {
        ++firsts[shuffled_order(three, w, rng)[0]];
    }
    CHECK(std::abs(firsts[0] / 40000.0 - 1.0 / 8) < 0.01);
    CHECK(std::abs(firsts[1] / 40000.0 - 2.0 / 8) < 0.01);
    CHECK(std::abs(firsts[2] / 40000.0 - 5.0 / 8) < 0.01);

    // Zero-weight cases trail, uniformly ordered among themselves.
    std::vector<Index> const four { 0, 1, 2, 3 };
    std::vector<double> const zw { 0.0, 1.0, 0.0, 0.0 };
    std::map<Index, int> second;
    for (int t = 0; t < 9000; ++t) {
        auto const o = shuffled_order(four, zw, rng);
        CHECK(o[0] == 1);
        ++second[o[1]];
    }
    for (Index c : { 0, 2, 3 }) {
        CHECK(std::abs(second[c] / 9000.0 - 1.0 / 3) < 0.03);
    }

    std::vector<double> const negative { 1.0, -1.0 };
    CHECK_THROWS_AS(shuffled_order(cases, negative, rng), UsageError);
    std::vector<double> const nan { 1.0, std::numeric_limits<double>::quiet_NaN() };
    CHECK_THROWS_AS(shuffled_order(cases, nan, rng), UsageError);
    std::vector<double> const zeros { 0.0, 0.0 };
    CHECK_THROWS_AS(shuffled_order(cases, zeros, rng), UsageError);
    std::vector<double> const short_w { 1.0 };
    CHECK_THROWS_AS(shuffled_order(cases, short_w, rng), UsageError);
}

TEST_CASE("random source determinism and derivation")
{
    RandomSource a(42);
    RandomSource b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a() == b());
    }
    auto const d1 = RandomSource(42).derive(7);
    auto const d2 = RandomSource(42).derive(7);
    CHECK(d1.seed() == d2.seed());
    CHECK(RandomSource(42).derive(7).seed() != RandomSource(42).derive(8).seed());

    // The documented mixing rule.
    std::uint64_t mixed = 42ULL ^ (7ULL * 0x9E3779B97F4A7C15ULL);
    CHECK(d1.seed() == splitmix64(mixed));

    RandomSource r(1);
    for (int i = 0; i < 1000; ++i) {
        CHECK(r.below(7) < 7);
        auto const u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("distinct rows")
{
    Matrix v(4, 2);
    v << 0, 1, 1, 0, 0, 1, 2, 2;
    CHECK(distinct_rows(v) == 3);
}

TEST_CASE("matrix CSV reading")
{
    std::istringstream ok("id,c0,c1\nA,0,2\r\nB,2.5,0\n");
    auto const m = read_error_matrix_csv(ok);
    CHECK(m.n_individuals() == 2);
    CHECK(m(1, 0) == 2.5);
    CHECK(m.individual_labels() == std::vector<std::string> { "A", "B" });
    CHECK(m.case_labels() == std::vector<std::string> { "c0", "c1" });

    auto line_of_error = [](std::string const& text) -> std::size_t {
        std::istringstream in(text);
        try {
            read_error_matrix_csv(in);
        } catch (ParseError const& e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of_error("") == 1);
    CHECK(line_of_error("name,c0\nA,1\n") == 1);
    CHECK(line_of_error("id,c0\nA,1\n\nB,2\n") == 3);
    CHECK(line_of_error("id,c0\nA,1\nB,1,2\n") == 3);
    CHECK(line_of_error("id,c0\nA,x\n") == 2);
    CHECK(line_of_error("id,c0\nA,1,5\n") == 2);
    CHECK(line_of_error("id,c0\nA,-1\n") == 2);
    CHECK(line_of_error("id,c0\nA,1e999\n") == 2);
    CHECK(line_of_error("id,c0\n") == 2);
}

TEST_CASE("matrix CSV round trip")
{
    RandomSource rng(9);
    Matrix v(3, 4);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = rng.uniform(0.0, 10.0);
    }
    ErrorMatrix const m(v, { "a", "b", "c" }, { "w", "x", "y", "z" });
    std::stringstream io;
    write_error_matrix_csv(io, m);
    auto const back = read_error_matrix_csv(io);
    CHECK(back.values() == m.values());
    CHECK(back.individual_labels() == m.individual_labels());
    CHECK(format_real(0.1) == "0.1");
    CHECK(format_real(3.0) == "3");
    CHECK(format_real(200000.0) == "200000");
    CHECK(format_real(-0.0) == "0");
}
