#include "lexicase/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string_view>
#include <utility>

namespace lexicase {

ErrorMatrix::ErrorMatrix(Matrix errors, std::vector<std::string> individual_labels, std::vector<std::string> case_labels)
    : errors_(std::move(errors))
    , individual_labels_(std::move(individual_labels))
    , case_labels_(std::move(case_labels))
{
    if (errors_.rows() < 1 || errors_.cols() < 1) {
        throw UsageError("error matrix needs at least one individual and one case");
    }
    if (!errors_.allFinite() || (errors_.array() < 0.0).any()) {
        throw UsageError("error matrix entries must be finite and nonnegative");
    }
    if (!individual_labels_.empty() && individual_labels_.size() != n_individuals()) {
        throw UsageError("individual label count does not match the number of rows");
    }
    if (!case_labels_.empty() && case_labels_.size() != n_cases()) {
        throw UsageError("case label count does not match the number of columns");
    }
    if (individual_labels_.empty()) {
        for (Index i = 0; i < n_individuals(); ++i) {
            individual_labels_.push_back("i" + std::to_string(i));
        }
    }
    if (case_labels_.empty()) {
        for (Index c = 0; c < n_cases(); ++c) {
            case_labels_.push_back("c" + std::to_string(c));
        }
    }
}

auto ErrorMatrix::from_rows(std::vector<std::vector<double>> const& rows) -> ErrorMatrix
{
    if (rows.empty() || rows.front().empty()) {
        throw UsageError("error matrix needs at least one individual and one case");
    }
    auto const n = static_cast<Eigen::Index>(rows.size());
    auto const m = static_cast<Eigen::Index>(rows.front().size());
    Matrix values(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto const& r = rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(r.size()) != m) {
            throw UsageError("ragged rows in error matrix");
        }
        for (Eigen::Index c = 0; c < m; ++c) {
            values(i, c) = r[static_cast<std::size_t>(c)];
        }
    }
    return ErrorMatrix(std::move(values));
}

auto ErrorMatrix::restrict_cases(std::span<Index const> cases) const -> ErrorMatrix
{
    Matrix sub(errors_.rows(), static_cast<Eigen::Index>(cases.size()));
    std::vector<std::string> labels;
    for (std::size_t j = 0; j < cases.size(); ++j) {
        if (cases[j] >= n_cases()) {
            throw UsageError("case index out of range");
        }
        sub.col(static_cast<Eigen::Index>(j)) = column(cases[j]);
        if (!case_labels_.empty()) {
            labels.push_back(case_labels_[cases[j]]);
        }
    }
    return ErrorMatrix(std::move(sub), individual_labels_, std::move(labels));
}

auto ErrorMatrix::all_cases() const -> CaseSet
{
    CaseSet cases(n_cases());
    std::iota(cases.begin(), cases.end(), Index { 0 });
    return cases;
}

auto elite_survivors(ErrorMatrix const& matrix, std::span<Index const> pool, Index test_case, double epsilon) -> Pool
{
    if (test_case >= matrix.n_cases()) {
        throw UsageError("case index " + std::to_string(test_case) + " out of range");
    }
    if (!(epsilon >= 0.0)) {
        throw UsageError("epsilon must be nonnegative");
    }
    if (pool.empty()) {
        throw UsageError("pool must be nonempty");
    }
    for (auto i : pool) {
        if (i >= matrix.n_individuals()) {
            throw UsageError("pool index out of range");
        }
    }
    Pool survivors(pool.begin(), pool.end());
    filter_elite(matrix, survivors, test_case, epsilon);
    return survivors;
}

void filter_elite(ErrorMatrix const& matrix, Pool& pool, Index test_case, double epsilon) noexcept
{
    auto const col = matrix.column(test_case);
    double best = col(static_cast<Eigen::Index>(pool.front()));
    for (auto i : pool) {
        best = std::min(best, col(static_cast<Eigen::Index>(i)));
    }
    double const threshold = survival_threshold(best, epsilon);
    std::erase_if(pool, [&](Index i) { return col(static_cast<Eigen::Index>(i)) > threshold; });
}

auto median(std::vector<double> values) -> double
{
    if (values.empty()) {
        throw UsageError("median of an empty sequence");
    }
    auto const n = values.size();
    auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    double const upper = *mid;
    if (n % 2 == 1) {
        return upper;
    }
    double const lower = *std::max_element(values.begin(), mid);
    return (lower + upper) / 2.0;
}

auto mad_epsilons(ErrorMatrix const& matrix) -> Vector
{
    auto const cases = matrix.all_cases();
    return mad_epsilons(matrix, cases);
}

auto mad_epsilons(ErrorMatrix const& matrix, std::span<Index const> cases) -> Vector
{
    Vector mads = Vector::Zero(static_cast<Eigen::Index>(matrix.n_cases()));
    std::vector<double> column(matrix.n_individuals());
    for (auto c : cases) {
        if (c >= matrix.n_cases()) {
            throw UsageError("case index out of range");
        }
        auto const col = matrix.column(c);
        std::copy(col.begin(), col.end(), column.begin());
        double const center = median(column);
        for (auto& v : column) {
            v = std::abs(v - center);
        }
        mads(static_cast<Eigen::Index>(c)) = median(column);
    }
    return mads;
}

auto shuffled_order(std::span<Index const> cases, RandomSource& rng) -> CaseOrdering
{
    CaseOrdering order(cases.begin(), cases.end());
    shuffle_in_place(std::span<Index>(order), rng);
    return order;
}

auto shuffled_order(std::span<Index const> cases, std::span<double const> weights, RandomSource& rng) -> CaseOrdering
{
    if (weights.size() != cases.size()) {
        throw UsageError("one weight per case is required");
    }
    bool any_positive = false;
    for (auto w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw UsageError("weights must be finite and nonnegative");
        }
        any_positive = any_positive || w > 0.0;
    }
    if (!any_positive && !cases.empty()) {
        throw UsageError("at least one weight must be positive");
    }

    // Exponential race: sorting by E_c / w_c with E_c ~ Exp(1) reproduces
    // successive weighted sampling without replacement.
    std::vector<std::pair<double, Index>> keyed;
    CaseOrdering zero_weight;
    keyed.reserve(cases.size());
    for (std::size_t j = 0; j < cases.size(); ++j) {
        if (weights[j] > 0.0) {
            double const e = -std::log1p(-rng.uniform());
            keyed.emplace_back(e / weights[j], cases[j]);
        } else {
            zero_weight.push_back(cases[j]);
        }
    }
    std::sort(keyed.begin(), keyed.end());
    CaseOrdering order;
    order.reserve(cases.size());
    for (auto const& [key, c] : keyed) {
        order.push_back(c);
    }
    shuffle_in_place(std::span<Index>(zero_weight), rng);
    order.insert(order.end(), zero_weight.begin(), zero_weight.end());
    return order;
}

auto distinct_rows(Matrix const& values) -> Index
{
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(values.rows()));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        auto& r = rows[static_cast<std::size_t>(i)];
        r.resize(static_cast<std::size_t>(values.cols()));
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            r[static_cast<std::size_t>(c)] = values(i, c);
        }
    }
    std::sort(rows.begin(), rows.end());
    return static_cast<Index>(std::unique(rows.begin(), rows.end()) - rows.begin());
}

namespace {

auto split_fields(std::string_view line) -> std::vector<std::string_view>
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto const comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

auto parse_error_value(std::string_view text, std::size_t line) -> double
{
    double value = 0.0;
    auto const* first = text.data();
    auto const* last = text.data() + text.size();
    if (text.empty() || text.front() == '+' || text.front() == ' ') {
        throw ParseError(line, "malformed number '" + std::string(text) + "'");
    }
    auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
    if (ec != std::errc() || ptr != last) {
        throw ParseError(line, "malformed number '" + std::string(text) + "'");
    }
    if (!std::isfinite(value) || value < 0.0) {
        throw ParseError(line, "error values must be finite and nonnegative, got '" + std::string(text) + "'");
    }
    return value;
}

} // namespace

auto read_error_matrix_csv(std::istream& in) -> ErrorMatrix
{
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> case_labels;
    std::vector<std::string> individual_labels;
    std::vector<double> values;

    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) {
            return false;
        }
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        return true;
    };

    if (!next_line()) {
        throw ParseError(1, "empty matrix file");
    }
    if (line.empty()) {
        throw ParseError(line_no, "blank line");
    }
    auto header = split_fields(line);
    if (header.front() != "id") {
        throw ParseError(line_no, "header must start with 'id'");
    }
    if (header.size() < 2) {
        throw ParseError(line_no, "header lists no cases");
    }
    for (std::size_t j = 1; j < header.size(); ++j) {
        case_labels.emplace_back(header[j]);
    }
    auto const m = case_labels.size();

    while (next_line()) {
        if (line.empty()) {
            // A single trailing newline is fine; anything after it is not.
            if (in.peek() == std::char_traits<char>::eof()) {
                break;
            }
            throw ParseError(line_no, "blank line");
        }
        auto fields = split_fields(line);
        if (fields.size() != m + 1) {
            throw ParseError(line_no, "expected " + std::to_string(m + 1) + " fields, found " + std::to_string(fields.size()));
        }
        individual_labels.emplace_back(fields.front());
        for (std::size_t j = 1; j < fields.size(); ++j) {
            values.push_back(parse_error_value(fields[j], line_no));
        }
    }
    if (individual_labels.empty()) {
        throw ParseError(line_no + 1, "matrix has no individuals");
    }

    auto const n = individual_labels.size();
    Matrix errors(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            errors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * m + j];
        }
    }
    return ErrorMatrix(std::move(errors), std::move(individual_labels), std::move(case_labels));
}

auto load_error_matrix_csv(std::string const& path) -> ErrorMatrix
{
    std::ifstream in(path);
    if (!in) {
        throw ResourceError("cannot open matrix file '" + path + "'");
    }
    return read_error_matrix_csv(in);
}

void write_error_matrix_csv(std::ostream& out, ErrorMatrix const& matrix)
{
    out << "id";
    for (Index c = 0; c < matrix.n_cases(); ++c) {
        out << ',' << (matrix.case_labels().empty() ? "c" + std::to_string(c) : matrix.case_labels()[c]);
    }
    out << '\n';
    for (Index i = 0; i < matrix.n_individuals(); ++i) {
        out << (matrix.individual_labels().empty() ? "i" + std::to_string(i) : matrix.individual_labels()[i]);
        for (Index c = 0; c < matrix.n_cases(); ++c) {
            out << ',' << format_real(matrix(i, c));
        }
        out << '\n';
    }
}

auto format_real(double value) -> std::string
{
    std::array<char, 64> buffer {};
    if (value == std::trunc(value) && std::abs(value) < 9007199254740992.0) {
        auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), static_cast<long long>(value));
        return std::string(buffer.data(), ptr);
    }
    auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
    return std::string(buffer.data(), ptr);
}

} // namespace lexicase
