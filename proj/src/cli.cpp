#include "lexicase/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <concepts>
#include <limits>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lexicase/detail/parallel.hpp"
#include "lexicase/lazy.hpp"
#include "lexicase/probability.hpp"

namespace lexicase::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr char const* ExitCodeHelp = "Exit status: 0 success, 1 internal error, 2 usage error, 3 parse error "
                                     "(malformed matrix or config), 4 resource error (I/O, oracle guard), "
                                     "5 configuration error.";

// ---- config parsing ---------------------------------------------------------

class ObjectReader {
public:
    ObjectReader(json const& object, std::string path, std::vector<std::string>& unknown,
                 std::initializer_list<std::string_view> allowed)
        : object_(object)
        , path_(std::move(path))
    {
        if (!object_.is_object()) {
            throw ConfigError(where() + "expected an object");
        }
        for (auto const& [key, value] : object_.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                unknown.push_back(path_.empty() ? key : path_ + "." + key);
            }
        }
    }

    [[nodiscard]] auto has(std::string const& key) const -> bool { return object_.contains(key); }
    [[nodiscard]] auto at(std::string const& key) const -> json const& { return object_.at(key); }
    [[nodiscard]] auto child_path(std::string const& key) const -> std::string { return path_.empty() ? key : path_ + "." + key; }

    void read(std::string const& key, std::string& into) const
    {
        if (has(key)) {
            expect(key, at(key).is_string(), "a string");
            into = at(key).get<std::string>();
        }
    }
    void read(std::string const& key, double& into) const
    {
        if (has(key)) {
            expect(key, at(key).is_number(), "a number");
            into = at(key).get<double>();
        }
    }
    template <std::unsigned_integral T>
    void read(std::string const& key, T& into) const
    {
        if (has(key)) {
            auto const& v = at(key);
            expect(key, v.is_number_unsigned() && v.get<std::uint64_t>() <= std::numeric_limits<T>::max(), "a nonnegative integer");
            into = v.get<T>();
        }
    }
    void read(std::string const& key, bool& into) const
    {
        if (has(key)) {
            expect(key, at(key).is_boolean(), "true or false");
            into = at(key).get<bool>();
        }
    }

private:
    [[nodiscard]] auto where() const -> std::string { return path_.empty() ? "" : path_ + ": "; }

    void expect(std::string const& key, bool ok, char const* what) const
    {
        if (!ok) {
            throw ConfigError(child_path(key) + ": expected " + what);
        }
    }

    json const& object_;
    std::string path_;
};

template <typename Parse>
auto parse_name(std::string const& text, std::string const& path, Parse parse)
{
    try {
        return parse(text);
    } catch (UsageError const& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void read_selector(ObjectReader const& parent, SelectorConfig& selector, std::vector<std::string>& unknown)
{
    if (!parent.has("selector")) {
        return;
    }
    auto const path = parent.child_path("selector");
    ObjectReader r(parent.at("selector"), path, unknown,
                   { "variant", "epsilon", "batch_size", "weights", "tournament_size", "alpha" });
    std::string variant(variant_name(selector.variant));
    r.read("variant", variant);
    selector.variant = parse_name(variant, path + ".variant", parse_variant);
    if (r.has("epsilon")) {
        auto const& eps = r.at("epsilon");
        if (eps.is_string() && eps.get<std::string>() == "mad") {
            selector.epsilon_source = EpsilonSource::mad;
        } else if (eps.is_number()) {
            selector.epsilon_source = EpsilonSource::fixed;
            selector.epsilon_value = eps.get<double>();
        } else {
            throw ConfigError(path + ".epsilon: expected \"mad\" or a number");
        }
    }
    r.read("batch_size", selector.batch_size);
    if (r.has("weights")) {
        auto const& w = r.at("weights");
        if (w.is_string() && w.get<std::string>() == "uniform") {
            selector.weight_metric = WeightMetric::uniform;
        } else if (w.is_string() && w.get<std::string>() == "failure_rate") {
            selector.weight_metric = WeightMetric::failure_rate;
        } else if (w.is_array() && std::all_of(w.begin(), w.end(), [](json const& x) { return x.is_number(); })) {
            selector.weight_metric = WeightMetric::user;
            selector.user_weights.resize(static_cast<Eigen::Index>(w.size()));
            for (std::size_t j = 0; j < w.size(); ++j) {
                selector.user_weights(static_cast<Eigen::Index>(j)) = w[j].get<double>();
            }
        } else {
            throw ConfigError(path + ".weights: expected \"uniform\", \"failure_rate\" or an array of numbers");
        }
    }
    r.read("tournament_size", selector.tournament_size);
    r.read("alpha", selector.alpha);
}

void read_downsample(ObjectReader const& parent, DownsampleSchedule& schedule, std::vector<std::string>& unknown)
{
    if (!parent.has("downsample")) {
        return;
    }
    auto const path = parent.child_path("downsample");
    ObjectReader r(parent.at("downsample"), path, unknown, { "mode", "rate", "parent_rate", "interval", "solve_threshold" });
    std::string mode(downsample_mode_name(schedule.mode));
    r.read("mode", mode);
    schedule.mode = parse_name(mode, path + ".mode", parse_downsample_mode);
    r.read("rate", schedule.ds_rate);
    r.read("parent_rate", schedule.parent_rate);
    r.read("interval", schedule.generational_interval);
    r.read("solve_threshold", schedule.solve_threshold);
}

void read_variation(ObjectReader const& parent, VariationRates& rates, std::vector<std::string>& unknown)
{
    if (!parent.has("variation")) {
        return;
    }
    ObjectReader r(parent.at("variation"), parent.child_path("variation"), unknown,
                   { "crossover", "mutation", "max_depth", "mutation_depth", "retries" });
    r.read("crossover", rates.crossover);
    r.read("mutation", rates.mutation);
    r.read("max_depth", rates.max_depth);
    r.read("mutation_depth", rates.mutation_depth);
    r.read("retries", rates.retries);
}

auto read_experiment(json const& node, std::string const& path, std::uint64_t default_seed, std::vector<std::string>& unknown)
    -> Experiment
{
    ObjectReader r(node, path, unknown,
                   { "name", "problem", "problem_cases", "population_size", "max_generations", "runs", "seed", "lazy",
                     "selection_jobs", "selector", "downsample", "variation" });
    Experiment e;
    e.name = "run";
    e.config.seed = default_seed;
    r.read("name", e.name);
    r.read("problem", e.config.problem);
    r.read("problem_cases", e.config.problem_cases);
    r.read("population_size", e.config.population_size);
    r.read("max_generations", e.config.max_generations);
    r.read("runs", e.runs);
    r.read("seed", e.config.seed);
    r.read("lazy", e.config.lazy);
    r.read("selection_jobs", e.config.selection_jobs);
    read_selector(r, e.config.selector, unknown);
    read_downsample(r, e.config.downsample, unknown);
    read_variation(r, e.config.variation, unknown);
    return e;
}

auto line_of(std::string_view text, std::size_t byte) -> std::size_t
{
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

// ---- output helpers ---------------------------------------------------------

auto to_json(std::vector<double> const& values) -> ordered_json
{
    auto arr = ordered_json::array();
    for (double v : values) {
        arr.push_back(v);
    }
    return arr;
}

auto vector_json(Vector const& v) -> ordered_json
{
    return to_json(std::vector<double>(v.begin(), v.end()));
}

// Writes to --output when given, otherwise to `out`.
void emit(std::string const& text, std::string const& output, std::ostream& out)
{
    if (output.empty()) {
        out << text;
        return;
    }
    std::ofstream file(output, std::ios::binary);
    if (!file || !(file << text)) {
        throw ResourceError("cannot write '" + output + "'");
    }
}

void write_file(std::filesystem::path const& path, std::string const& text)
{
    std::ofstream file(path, std::ios::binary);
    if (!file || !(file << text)) {
        throw ResourceError("cannot write '" + path.string() + "'");
    }
}

auto read_file(std::string const& path) -> std::string
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ResourceError("cannot open '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

auto split(std::string const& text, char sep) -> std::vector<std::string>
{
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, sep)) {
        if (!part.empty()) {
            parts.push_back(part);
        }
    }
    return parts;
}

auto parse_double(std::string const& text, std::string const& what) -> double
{
    double value = 0.0;
    auto const* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw UsageError(what + ": '" + text + "' is not a number");
    }
    return value;
}

// ---- probs -------------------------------------------------------------------

struct ProbsOptions {
    std::string matrix;
    std::string selector = "lexicase";
    std::string epsilon = "mad";
    Index batch_size = 1;
    std::string weights = "uniform";
    Index tournament_size = 7;
    Index trials = 100000;
    double alpha = 1.0;
    bool override_guard = false;
};

auto probs_config(ProbsOptions const& o, Index n_cases) -> SelectorConfig
{
    SelectorConfig config;
    config.variant = parse_variant(o.selector);
    if (o.epsilon == "mad") {
        config.epsilon_source = EpsilonSource::mad;
    } else {
        config.epsilon_source = EpsilonSource::fixed;
        config.epsilon_value = parse_double(o.epsilon, "--epsilon");
    }
    config.batch_size = o.batch_size;
    if (o.weights == "uniform") {
        config.weight_metric = WeightMetric::uniform;
    } else if (o.weights == "failure_rate") {
        config.weight_metric = WeightMetric::failure_rate;
    } else {
        auto const parts = split(o.weights, ',');
        if (parts.size() != n_cases) {
            throw UsageError("--weights needs one value per case (" + std::to_string(n_cases) + ")");
        }
        config.weight_metric = WeightMetric::user;
        config.user_weights.resize(static_cast<Eigen::Index>(parts.size()));
        for (std::size_t j = 0; j < parts.size(); ++j) {
            config.user_weights(static_cast<Eigen::Index>(j)) = parse_double(parts[j], "--weights");
        }
    }
    config.tournament_size = o.tournament_size;
    config.alpha = o.alpha;
    config.validate();
    return config;
}

auto cmd_probs(ProbsOptions const& o, std::uint64_t seed, std::string const& output, std::ostream& out) -> int
{
    auto const matrix = load_error_matrix_csv(o.matrix);
    auto const cases = matrix.all_cases();
    auto const n = matrix.n_individuals();
    auto const config = probs_config(o, matrix.n_cases());
    auto const prepared = prepare_selector(matrix, cases, config);
    std::vector<double> const eps(prepared.epsilons.begin(), prepared.epsilons.end());
    bool const uses_eps = config.variant == Variant::epsilon;

    ordered_json report;
    report["individuals"] = matrix.individual_labels();
    report["selector"] = variant_name(config.variant);
    auto warnings = ordered_json::array();

    std::optional<SelectionDistribution> exact;
    try {
        switch (config.variant) {
        case Variant::lexicase:
        case Variant::plexicase: exact = exact_distribution(matrix, cases, {}, o.override_guard); break;
        case Variant::epsilon: exact = exact_distribution(matrix, cases, eps, o.override_guard); break;
        case Variant::batch:
            if (config.batch_size == 1) {
                exact = exact_distribution(matrix, cases, {}, o.override_guard);
            }
            break;
        case Variant::weighted:
            if (config.weight_metric == WeightMetric::uniform) {
                exact = exact_distribution(matrix, cases, {}, o.override_guard);
            }
            break;
        case Variant::tournament: exact = tournament_distribution(matrix, cases, config.tournament_size); break;
        case Variant::fitness_proportionate: exact = fitness_proportionate_distribution(matrix, cases); break;
        case Variant::uniform_random:
            exact = SelectionDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
            break;
        }
        if (!exact) {
            warnings.push_back("no exact form for this selector configuration; exact omitted");
        }
    } catch (ResourceError const& e) {
        warnings.push_back(std::string(e.what()) + "; exact omitted");
    }

    auto const plex = plexicase_distribution(matrix, cases, config.alpha, uses_eps ? std::span<double const>(eps) : std::span<double const> {});
    auto const empirical = empirical_distribution(matrix, cases, config, o.trials, RandomSource(seed));

    report["exact"] = exact ? to_json(exact->probs) : ordered_json(nullptr);
    report["plexicase"] = to_json(plex.probs);
    report["empirical"] = to_json(empirical.probs);
    ordered_json tv;
    tv["exact_plexicase"] = exact ? ordered_json(total_variation(*exact, plex)) : ordered_json(nullptr);
    tv["exact_empirical"] = exact ? ordered_json(total_variation(*exact, empirical)) : ordered_json(nullptr);
    tv["plexicase_empirical"] = total_variation(plex, empirical);
    report["total_variation"] = tv;
    report["alpha"] = config.alpha;
    report["trials"] = o.trials;
    report["warnings"] = warnings;
    emit(report.dump(2) + "\n", output, out);
    return 0;
}

// ---- evolve ------------------------------------------------------------------

auto run_summary(Experiment const& e, std::vector<RunRecord> const& records) -> ordered_json
{
    Index successes = 0;
    Index generalizations = 0;
    double generations = 0.0;
    Index evaluations = 0;
    double diversity = 0.0;
    for (auto const& r : records) {
        successes += r.success ? 1 : 0;
        generalizations += r.success && r.generalization ? 1 : 0;
        if (r.solution_generation) {
            generations += static_cast<double>(*r.solution_generation);
        }
        evaluations += r.total_evaluations;
        double per_run = 0.0;
        for (auto const& row : r.rows) {
            per_run += static_cast<double>(row.behavioral_diversity);
        }
        diversity += per_run / static_cast<double>(r.rows.size());
    }
    ordered_json s;
    s["name"] = e.name;
    s["problem"] = e.config.problem;
    s["selector"] = variant_name(e.config.selector.variant);
    s["downsample"] = downsample_mode_name(e.config.downsample.mode);
    s["lazy"] = e.config.lazy;
    s["runs"] = e.runs;
    s["first_seed"] = e.config.seed;
    s["successes"] = successes;
    s["generalizations"] = generalizations;
    s["mean_generations_to_solution"] = successes > 0 ? ordered_json(generations / static_cast<double>(successes)) : ordered_json(nullptr);
    s["total_evaluations"] = evaluations;
    s["mean_behavioral_diversity"] = records.empty() ? 0.0 : diversity / static_cast<double>(records.size());
    return s;
}

auto cmd_evolve(std::string const& config_path, bool timing, std::uint64_t seed, unsigned jobs, std::string const& output,
                std::ostream& out) -> int
{
    auto const config = parse_cli_config(read_file(config_path), seed);
    std::filesystem::path const root = !output.empty() ? output : !config.output.empty() ? config.output : "results";

    struct Job {
        std::size_t experiment;
        Index run;
    };
    std::vector<Job> work;
    std::vector<std::vector<RunRecord>> records(config.experiments.size());
    for (std::size_t e = 0; e < config.experiments.size(); ++e) {
        records[e].resize(config.experiments[e].runs);
        for (Index r = 0; r < config.experiments[e].runs; ++r) {
            work.push_back({ e, r });
        }
        std::error_code ec;
        std::filesystem::create_directories(root / config.experiments[e].name, ec);
        if (ec) {
            throw ResourceError("cannot create '" + (root / config.experiments[e].name).string() + "': " + ec.message());
        }
    }

    // One run per task so long runs do not hold back a whole chunk.
    detail::parallel_chunks(work.size(), jobs, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (auto k = begin; k < end; ++k) {
            auto const& [e, r] = work[k];
            auto run_config = config.experiments[e].config;
            run_config.seed += r;
            records[e][r] = run_evolution(run_config);
        }
    });

    auto all = ordered_json::array();
    for (std::size_t e = 0; e < config.experiments.size(); ++e) {
        auto const& experiment = config.experiments[e];
        auto const dir = root / experiment.name;
        for (Index r = 0; r < experiment.runs; ++r) {
            std::ostringstream name;
            name << "run_" << std::setw(3) << std::setfill('0') << r << ".jsonl";
            write_file(dir / name.str(), run_record_jsonl(records[e][r], timing));
        }
        auto summary = run_summary(experiment, records[e]);
        write_file(dir / "summary.json", summary.dump(2) + "\n");
        all.push_back(summary);
    }
    ordered_json report;
    report["experiments"] = all;
    out << report.dump(2) << "\n";
    return 0;
}

// ---- bench -------------------------------------------------------------------

struct BenchOptions {
    std::string sizes = "1000x200";
    std::string selectors = "lexicase,plexicase,lazy";
    Index repetitions = 5;
    Index events = 1000;
};

struct BenchResult {
    double median_ns = 0.0;
    double cells = 0.0;
};

auto bench_selector(ErrorMatrix const& matrix, std::string const& name, BenchOptions const& o, RandomSource const& rng)
    -> BenchResult
{
    auto const cases = matrix.all_cases();
    auto const n = matrix.n_individuals();
    auto const m = matrix.n_cases();
    std::vector<double> times;
    BenchResult result;
    result.cells = static_cast<double>(n * m);
    for (Index rep = 0; rep < o.repetitions; ++rep) {
        auto const t0 = std::chrono::steady_clock::now();
        if (name == "lazy") {
            LazyEvaluator evaluator(n, m, [&](Index i, Index c) { return matrix(i, c); });
            for (Index e = 0; e < o.events; ++e) {
                auto stream = rng.derive(e);
                lazy_lexicase_select(evaluator, cases, stream);
            }
            // Lookups per event equal the cells one isolated selection would compute.
            result.cells = static_cast<double>(evaluator.cells_requested()) / static_cast<double>(o.events);
        } else {
            SelectorConfig config;
            config.variant = parse_variant(name);
            auto const prepared = prepare_selector(matrix, cases, config);
            for (Index e = 0; e < o.events; ++e) {
                auto stream = rng.derive(e);
                select_one(matrix, cases, prepared, stream);
            }
        }
        auto const t1 = std::chrono::steady_clock::now();
        times.push_back(static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
    }
    result.median_ns = median(times);
    return result;
}

auto cmd_bench(BenchOptions const& o, std::uint64_t seed, std::string const& output, std::ostream& out) -> int
{
    if (o.repetitions < 3) {
        throw UsageError("--repetitions must be at least 3");
    }
    if (o.events < 1) {
        throw UsageError("--events must be positive");
    }
    auto const selectors = split(o.selectors, ',');
    if (selectors.empty()) {
        throw UsageError("--selectors is empty");
    }
    for (auto const& s : selectors) {
        if (s != "lazy") {
            parse_variant(s);
        }
    }
    std::ostringstream csv;
    csv << "n_individuals,n_cases,selector,median_ns,speedup_vs_lexicase,cells_evaluated\n";
    RandomSource const base(seed);
    Index cell = 0;
    for (auto const& size : split(o.sizes, ',')) {
        auto const x = size.find('x');
        Index n = 0;
        Index m = 0;
        if (x == std::string::npos
            || std::from_chars(size.data(), size.data() + x, n).ptr != size.data() + x
            || std::from_chars(size.data() + x + 1, size.data() + size.size(), m).ptr != size.data() + size.size()
            || n < 1 || m < 1) {
            throw UsageError("--sizes entries look like 1000x200, got '" + size + "'");
        }
        auto fill = base.derive(2 * cell);
        Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            for (Eigen::Index i = 0; i < values.rows(); ++i) {
                values(i, c) = fill.uniform();
            }
        }
        ErrorMatrix const matrix(std::move(values));
        auto const events = base.derive(2 * cell + 1);
        auto const reference = bench_selector(matrix, "lexicase", o, events);
        for (auto const& s : selectors) {
            auto const r = s == "lexicase" ? reference : bench_selector(matrix, s, o, events);
            csv << n << ',' << m << ',' << s << ',' << format_real(r.median_ns) << ','
                << format_real(reference.median_ns / r.median_ns) << ',' << format_real(r.cells) << '\n';
        }
        ++cell;
    }
    emit(csv.str(), output, out);
    return 0;
}

// ---- downsample --------------------------------------------------------------

struct DownsampleOptions {
    std::string matrix;
    double threshold = 0.0;
    Index size = 0;
    double rate = 0.0;
    double parent_rate = 1.0;
};

auto cmd_downsample(DownsampleOptions const& o, std::uint64_t seed, std::string const& output, std::ostream& out) -> int
{
    if (!(o.threshold >= 0.0)) {
        throw UsageError("--threshold must be nonnegative");
    }
    if (!(o.parent_rate > 0.0 && o.parent_rate <= 1.0)) {
        throw UsageError("--parent-rate must lie in (0, 1]");
    }
    auto const matrix = load_error_matrix_csv(o.matrix);
    auto const n = matrix.n_individuals();
    auto const m = matrix.n_cases();
    Index size = o.size;
    if (o.size == 0) {
        if (!(o.rate > 0.0 && o.rate <= 1.0)) {
            throw UsageError("give --size or a --rate in (0, 1]");
        }
        size = sample_size(o.rate, m);
    }
    if (size > m) {
        throw UsageError("--size exceeds the number of cases");
    }
    RandomSource rng(seed);
    CaseSet rows;
    if (o.parent_rate < 1.0) {
        rows = uniform_subset(n, sample_size(o.parent_rate, n), rng);
    } else {
        rows.resize(n);
        std::iota(rows.begin(), rows.end(), Index { 0 });
    }
    Matrix sampled(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        sampled.row(static_cast<Eigen::Index>(k)) = matrix.row(rows[k]);
    }
    auto const solves = SolveMatrix::from_errors(sampled, o.threshold);
    auto sample = informed_downsample(solves, size, rng);
    auto const order = sample;
    std::sort(sample.begin(), sample.end());

    ordered_json report;
    report["cases"] = matrix.case_labels();
    report["threshold"] = o.threshold;
    auto parents = ordered_json::array();
    for (auto r : rows) {
        parents.push_back(matrix.individual_labels()[r]);
    }
    report["parents"] = parents;
    auto solved = ordered_json::array();
    for (Index c = 0; c < m; ++c) {
        solved.push_back(static_cast<Index>(solves.values().col(static_cast<Eigen::Index>(c)).count()));
    }
    report["solved_counts"] = solved;
    auto const distances = case_distances(solves);
    auto dist = ordered_json::array();
    for (Eigen::Index a = 0; a < distances.rows(); ++a) {
        dist.push_back(vector_json(distances.row(a).transpose()));
    }
    report["distances"] = dist;
    report["sample_size"] = size;
    report["pick_order"] = order;
    report["sample"] = sample;
    auto labels = ordered_json::array();
    for (auto c : sample) {
        labels.push_back(matrix.case_labels()[c]);
    }
    report["sample_labels"] = labels;
    emit(report.dump(2) + "\n", output, out);
    return 0;
}

} // namespace

auto parse_cli_config(std::string_view json_text, std::uint64_t default_seed) -> CliConfig
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (json::parse_error const& e) {
        throw ParseError(line_of(json_text, e.byte == 0 ? 0 : e.byte - 1), std::string("invalid JSON: ") + e.what());
    }
    std::vector<std::string> unknown;
    CliConfig config;
    if (doc.is_object() && doc.contains("experiments")) {
        ObjectReader top(doc, "", unknown, { "experiments", "output" });
        top.read("output", config.output);
        auto const& list = doc.at("experiments");
        if (!list.is_array() || list.empty()) {
            throw ConfigError("experiments: expected a nonempty array");
        }
        for (std::size_t k = 0; k < list.size(); ++k) {
            config.experiments.push_back(read_experiment(list[k], "experiments[" + std::to_string(k) + "]", default_seed, unknown));
        }
    } else {
        config.experiments.push_back(read_experiment(doc, "", default_seed, unknown));
    }
    if (!unknown.empty()) {
        std::string list;
        for (auto const& key : unknown) {
            list += (list.empty() ? "" : ", ") + key;
        }
        throw ConfigError("unknown keys: " + list);
    }
    std::map<std::string, int> names;
    for (auto const& e : config.experiments) {
        if (e.name.empty() || e.name.find_first_of("/\\") != std::string::npos || e.name == "." || e.name == "..") {
            throw ConfigError("experiment name '" + e.name + "' is not a plain directory name");
        }
        if (++names[e.name] > 1) {
            throw ConfigError("duplicate experiment name '" + e.name + "'");
        }
        if (e.runs < 1) {
            throw ConfigError(e.name + ": runs must be at least 1");
        }
        try {
            e.config.validate(make_problem(e.config.problem, e.config.problem_cases));
        } catch (UsageError const& err) {
            throw ConfigError(e.name + ": " + err.what());
        } catch (ConfigError const& err) {
            throw ConfigError(e.name + ": " + err.what());
        }
    }
    return config;
}

auto run_record_jsonl(RunRecord const& record, bool timing) -> std::string
{
    std::string text;
    for (auto const& row : record.rows) {
        ordered_json line;
        line["generation"] = row.generation;
        line["best_error_sum"] = row.best_error_sum;
        line["best_cases_solved"] = row.best_cases_solved;
        line["behavioral_diversity"] = row.behavioral_diversity;
        line["active_cases"] = row.active_cases;
        line["generation_evaluations"] = row.generation_evaluations;
        line["estimation_evaluations"] = row.estimation_evaluations;
        line["evaluations"] = row.evaluations;
        line["verification_evaluations"] = row.verification_evaluations;
        if (timing) {
            line["selection_ns"] = row.selection_ns;
        }
        text += line.dump() + "\n";
    }
    ordered_json last;
    last["success"] = record.success;
    last["generalization"] = record.generalization;
    last["solution_generation"] = record.solution_generation ? ordered_json(*record.solution_generation) : ordered_json(nullptr);
    last["total_evaluations"] = record.total_evaluations;
    last["solution"] = record.solution;
    text += last.dump() + "\n";
    return text;
}

auto run(std::vector<std::string> const& args, std::ostream& out, std::ostream& err) -> int
{
    CLI::App app { "Lexicase selection toolkit: selection probabilities, GP runs, benchmarks, downsampling.", "lexicase" };
    app.footer(ExitCodeHelp);
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    unsigned jobs = 1;
    std::string output;
    app.add_option("--seed", seed, "Random seed")->capture_default_str();
    app.add_option("--jobs", jobs, "Worker threads (evolve runs)")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--output", output, "Output file (probs, bench, downsample) or directory (evolve)");

    ProbsOptions probs;
    auto* p = app.add_subcommand("probs", "Exact, plexicase and empirical selection distributions for a matrix");
    p->fallthrough();
    p->add_option("--matrix", probs.matrix, "Error matrix CSV")->required();
    p->add_option("--selector", probs.selector, "lexicase, epsilon, batch, weighted, plexicase, tournament, "
                                                "fitness_proportionate, uniform_random")
        ->capture_default_str();
    p->add_option("--epsilon", probs.epsilon, "'mad' or a fixed epsilon")->capture_default_str();
    p->add_option("--batch-size", probs.batch_size)->capture_default_str();
    p->add_option("--weights", probs.weights, "'uniform', 'failure_rate' or comma-separated per-case weights")->capture_default_str();
    p->add_option("--tournament-size", probs.tournament_size)->capture_default_str();
    p->add_option("--trials", probs.trials, "Selection events for the empirical distribution")->capture_default_str();
    p->add_option("--alpha", probs.alpha, "Plexicase pressure exponent")->capture_default_str();
    p->add_flag("--override-guard", probs.override_guard, "Run the exact oracle past its size guard");

    std::string config_path;
    bool timing = false;
    auto* e = app.add_subcommand("evolve", "Run the experiments of a JSON config and write JSON-lines records");
    e->fallthrough();
    e->add_option("--config", config_path, "Experiment config (JSON)")->required();
    e->add_flag("--timing", timing, "Include selection_ns in generation rows (output no longer reproducible)");

    BenchOptions bench;
    auto* b = app.add_subcommand("bench", "Median wall time of selection events on random continuous matrices");
    b->fallthrough();
    b->add_option("--sizes", bench.sizes, "Comma-separated NxM grid")->capture_default_str();
    b->add_option("--selectors", bench.selectors, "Comma-separated selector names, plus 'lazy'")->capture_default_str();
    b->add_option("--repetitions", bench.repetitions)->capture_default_str();
    b->add_option("--events", bench.events, "Selection events per repetition")->capture_default_str();

    DownsampleOptions ds;
    auto* d = app.add_subcommand("downsample", "Solve matrix, case distances and an informed downsample");
    d->fallthrough();
    d->add_option("--matrix", ds.matrix, "Error matrix CSV")->required();
    d->add_option("--threshold", ds.threshold, "Errors at or below this count as solved")->capture_default_str();
    auto* size_opt = d->add_option("--size", ds.size, "Sample size");
    d->add_option("--rate", ds.rate, "Sample rate (size = floor(rate * cases + 0.5), at least 1)")->excludes(size_opt);
    d->add_option("--parent-rate", ds.parent_rate, "Fraction of individuals used for the solve matrix")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (CLI::ParseError const& ex) {
        std::ostringstream o;
        std::ostringstream e2;
        auto const code = app.exit(ex, o, e2);
        out << o.str();
        err << e2.str();
        return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
    }

    try {
        if (*p) {
            return cmd_probs(probs, seed, output, out);
        }
        if (*e) {
            return cmd_evolve(config_path, timing, seed, jobs, output, out);
        }
        if (*b) {
            return cmd_bench(bench, seed, output, out);
        }
        return cmd_downsample(ds, seed, output, out);
    } catch (ParseError const& ex) {
        err << "parse error: " << ex.what() << "\n";
        return static_cast<int>(ExitCode::parse);
    } catch (ConfigError const& ex) {
        err << "config error: " << ex.what() << "\n";
        return static_cast<int>(ExitCode::config);
    } catch (ResourceError const& ex) {
        err << "resource error: " << ex.what() << "\n";
        return static_cast<int>(ExitCode::resource);
    } catch (UsageError const& ex) {
        err << "usage error: " << ex.what() << "\n";
        return static_cast<int>(ExitCode::usage);
    } catch (std::exception const& ex) {
        err << "internal error: " << ex.what() << "\n";
        return static_cast<int>(ExitCode::internal);
    }
}

} // namespace lexicase::cli
