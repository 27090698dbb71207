#ifndef LEXICASE_ERROR_HPP
#define LEXICASE_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lexicase {

// Caller passed arguments that violate an operation's preconditions.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed input file. `line` is 1-based; 0 when no line applies.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::string const& what)
        : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what)
        , line_(line)
    {
    }

    [[nodiscard]] auto line() const noexcept -> std::size_t { return line_; }

private:
    std::size_t line_;
};

// A computation would exceed its safety budget (e.g. the exact oracle guard).
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid experiment configuration, detected before any work starts.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The error function of a lazy evaluator failed on a specific cell.
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(std::size_t individual, std::size_t test_case, std::string const& what)
        : std::runtime_error("evaluation of individual " + std::to_string(individual) + " on case "
                             + std::to_string(test_case) + " failed: " + what)
        , individual_(individual)
        , case_(test_case)
    {
    }

    [[nodiscard]] auto individual() const noexcept -> std::size_t { return individual_; }
    [[nodiscard]] auto test_case() const noexcept -> std::size_t { return case_; }

private:
    std::size_t individual_;
    std::size_t case_;
};

} // namespace lexicase

#endif
