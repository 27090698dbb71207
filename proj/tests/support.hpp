#ifndef LEXICASE_TESTS_SUPPORT_HPP
#define LEXICASE_TESTS_SUPPORT_HPP

#include <span>
#include <vector>

#include "lexicase/core.hpp"
#include "lexicase/probability.hpp"
#include "oracle.hpp"

namespace support {

using lexicase::Index;

// Rows drawn from a small palette of distinct vectors, mixing integer-valued
// and continuous errors, so duplicates and ties are common.
inline auto random_rows(lexicase::RandomSource& rng, Index max_distinct, Index max_cases, Index max_rows = 8) -> oracle::Rows
{
    auto const distinct = 1 + rng.below(max_distinct);
    auto const cases = 1 + rng.below(max_cases);
    bool const discrete = rng.bernoulli(0.5);
    oracle::Rows palette(distinct, std::vector<double>(cases));
    for (auto& row : palette) {
        for (auto& x : row) {
            x = discrete || rng.bernoulli(0.3) ? static_cast<double>(rng.below(3)) : rng.uniform(0.0, 2.0);
        }
    }
    auto const n = distinct + rng.below(max_rows - distinct + 1);
    oracle::Rows rows(palette);
    while (rows.size() < n) {
        rows.push_back(palette[rng.below(distinct)]);
    }
    lexicase::shuffle_in_place(std::span<std::vector<double>>(rows), rng);
    return rows;
}

inline auto all_cases(Index m) -> std::vector<Index>
{
    std::vector<Index> c(m);
    for (Index j = 0; j < m; ++j) {
        c[j] = j;
    }
    return c;
}

inline auto probs(lexicase::SelectionDistribution const& d) -> std::vector<double>
{
    return d.probs;
}

} // namespace support

#endif
