#ifndef LEXICASE_CORE_HPP
#define LEXICASE_CORE_HPP

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lexicase/error.hpp"
#include "lexicase/random.hpp"

namespace lexicase {

using Index = std::size_t;

// Ordered lists of individual or case indices.
using Pool = std::vector<Index>;
using CaseSet = std::vector<Index>;
using CaseOrdering = std::vector<Index>;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Population x case matrix of nonnegative finite errors (0 = perfect on the case).
///
/// Storage is column-major so that per-case scans (eliteness, MAD, solve
/// columns) walk contiguous memory. The object is immutable once built.
class ErrorMatrix {
public:
    explicit ErrorMatrix(Matrix errors,
                         std::vector<std::string> individual_labels = {},
                         std::vector<std::string> case_labels = {});

    // Convenience for tests and small fixtures: one initializer list per individual.
    static auto from_rows(std::vector<std::vector<double>> const& rows) -> ErrorMatrix;

    [[nodiscard]] auto n_individuals() const noexcept -> Index { return static_cast<Index>(errors_.rows()); }
    [[nodiscard]] auto n_cases() const noexcept -> Index { return static_cast<Index>(errors_.cols()); }

    [[nodiscard]] auto operator()(Index individual, Index test_case) const noexcept -> double
    {
        return errors_(static_cast<Eigen::Index>(individual), static_cast<Eigen::Index>(test_case));
    }

    [[nodiscard]] auto values() const noexcept -> Matrix const& { return errors_; }
    [[nodiscard]] auto column(Index test_case) const { return errors_.col(static_cast<Eigen::Index>(test_case)); }
    [[nodiscard]] auto row(Index individual) const { return errors_.row(static_cast<Eigen::Index>(individual)); }

    [[nodiscard]] auto individual_labels() const noexcept -> std::vector<std::string> const& { return individual_labels_; }
    [[nodiscard]] auto case_labels() const noexcept -> std::vector<std::string> const& { return case_labels_; }

    // Sub-matrix restricted to the given cases, in the given order. Labels follow.
    [[nodiscard]] auto restrict_cases(std::span<Index const> cases) const -> ErrorMatrix;

    [[nodiscard]] auto all_cases() const -> CaseSet;

private:
    Matrix errors_;
    std::vector<std::string> individual_labels_;
    std::vector<std::string> case_labels_;
};

// Pool members whose error on `test_case` is within `epsilon` of the pool minimum.
// Input order is preserved and the result is never empty.
auto elite_survivors(ErrorMatrix const& matrix, std::span<Index const> pool, Index test_case, double epsilon) -> Pool;

// Largest error that survives on a case with the given best error and epsilon.
// A positive epsilon gets a 1e-12 relative allowance so that survivors sitting
// exactly on the boundary are not lost to rounding. Epsilon 0 means exact ties.
inline auto survival_threshold(double best, double epsilon) noexcept -> double
{
    return epsilon > 0.0 ? (best + epsilon) * (1.0 + 1e-12) : best;
}

// In-place variant of elite_survivors used on the selection hot path. No validation.
void filter_elite(ErrorMatrix const& matrix, Pool& pool, Index test_case, double epsilon) noexcept;

// Median of a sequence; the mean of the two middle values for even lengths.
auto median(std::vector<double> values) -> double;

// Per-case median absolute deviation over the whole population.
auto mad_epsilons(ErrorMatrix const& matrix) -> Vector;

// MAD for the listed cases only; entries of unlisted cases are zero.
auto mad_epsilons(ErrorMatrix const& matrix, std::span<Index const> cases) -> Vector;

/// Random permutation of `cases`.
///
/// Without weights the permutation is uniform. With weights (aligned with
/// `cases`) it follows successive sampling without replacement, P(next = c) =
/// w_c / sum of remaining weights; zero-weight cases go last in uniform order.
auto shuffled_order(std::span<Index const> cases, RandomSource& rng) -> CaseOrdering;
auto shuffled_order(std::span<Index const> cases, std::span<double const> weights, RandomSource& rng) -> CaseOrdering;

// In-place Fisher-Yates driven by RandomSource::below.
template <typename T>
void shuffle_in_place(std::span<T> items, RandomSource& rng) noexcept
{
    for (auto i = items.size(); i > 1; --i) {
        auto const j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

// Number of distinct rows.
auto distinct_rows(Matrix const& values) -> Index;

// Matrix CSV: header `id,<case label>...`, then `<individual label>,<errors>...`.
auto read_error_matrix_csv(std::istream& in) -> ErrorMatrix;
auto load_error_matrix_csv(std::string const& path) -> ErrorMatrix;
void write_error_matrix_csv(std::ostream& out, ErrorMatrix const& matrix);

// Shortest decimal text that parses back to the same double.
auto format_real(double value) -> std::string;

} // namespace lexicase

#endif
