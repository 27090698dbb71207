#ifndef LEXICASE_CLI_HPP
#define LEXICASE_CLI_HPP

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lexicase/evolve.hpp"

namespace lexicase::cli {

enum class ExitCode : int {
    ok = 0,
    internal = 1,
    usage = 2,
    parse = 3,
    resource = 4,
    config = 5,
};

struct Experiment {
    std::string name;
    RunConfig config;
    Index runs = 1; // seeds config.seed, config.seed + 1, ...
};

struct CliConfig {
    std::vector<Experiment> experiments;
    std::string output; // empty = use --output
};

// Parses an evolve configuration document. Unknown keys, wrong types and
// inconsistent settings raise ConfigError; unknown keys are reported together.
auto parse_cli_config(std::string_view json_text, std::uint64_t default_seed) -> CliConfig;

// One line per generation row, then one line of terminal fields.
auto run_record_jsonl(RunRecord const& record, bool timing) -> std::string;

// Entry point shared by the executable and the tests. Returns the process exit status.
auto run(std::vector<std::string> const& args, std::ostream& out, std::ostream& err) -> int;

} // namespace lexicase::cli

#endif
