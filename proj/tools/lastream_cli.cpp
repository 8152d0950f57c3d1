// lastream: generate synthetic traces, train prefix oracles, run sweeps and
// self-checks. Exit codes: 0 ok, 1 config error, 2 data error, 3 internal
// invariant violation.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lastream/harness/harness.hpp"
#include "lastream/harness/verify.hpp"

using namespace lastream;
using namespace lastream::harness;

namespace {

enum Exit { ok = 0, config_error = 1, data_error = 2, invariant_error = 3 };

ExperimentConfig config_or_default(const std::string& path) {
    return path.empty() ? config_from_json(nlohmann::json::object()) : load_config(path);
}

/// Output file, or stdout when no path is given.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (path.empty()) return;
        file_.open(path);
        if (!file_) throw DataError("cannot write '" + path + "'");
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

int cmd_generate(const std::string& config, const std::string& out) {
    const auto c = config_or_default(config);
    if (c.dataset.source == "file") throw ConfigError("generate needs a synthetic dataset source");
    const Stream s = load_stream(c.dataset);
    Sink sink(out);
    auto& o = sink.stream();
    o << "# " << c.dataset.source << " n=" << c.dataset.n << " m=" << c.dataset.m << " q=" << c.dataset.q
      << " seed=" << c.dataset.seed << '\n';
    for (const auto& u : s) o << u.item << '\n';
    return ok;
}

int cmd_train(const std::string& config, const std::string& out) {
    auto c = config_or_default(config);
    const Dataset data = load_dataset(c);
    Sink sink(out);
    if (c.oracle.kind == "prefix") {
        auto orc = std::dynamic_pointer_cast<const SetOracle>(build_oracle(c, data));
        if (!orc) throw ConfigError("noise wrapping cannot be exported; set oracle.noise to 0");
        write_oracle(sink.stream(), *orc);
    } else if (c.oracle.kind == "exact") {
        auto orc = exact_oracle(data.stream, data.universe, c.oracle.p.value_or(c.estimator.p));
        write_oracle(sink.stream(), *orc, {1});
    } else {
        throw ConfigError("train-oracle needs oracle.kind prefix or exact");
    }
    return ok;
}

int cmd_run(const std::string& config, std::string out, std::string format, std::optional<std::uint64_t> seed,
            std::optional<std::size_t> threads) {
    auto c = config_or_default(config);
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
    if (!out.empty()) c.output.path = out;
    if (!format.empty()) c.output.format = format;
    validate(c);
    const auto res = run_experiment(c);
    if (c.output.path.empty()) {
        if (c.output.format == "csv")
            write_csv(std::cout, res.rows);
        else
            std::cout << rows_to_json(res.rows).dump(2) << '\n';
    } else {
        emit_results(res.rows, c.output.path, c.output.format, res.metadata);
        std::cerr << res.rows.size() << " rows written to " << c.output.path << '\n';
    }
    return ok;
}

int cmd_verify() {
    bool all = true;
    for (const auto& r : run_verification()) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        all = all && r.passed;
    }
    return all ? ok : invariant_error;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learning-augmented streaming estimators: sliding windows, time decay, sweeps"};
    app.require_subcommand(1);

    std::string config, out, format;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;

    auto* gen = app.add_subcommand("generate", "Write a synthetic trace (one item per line)");
    gen->add_option("--config", config, "Experiment config (JSON); its dataset section is used");
    gen->add_option("--out", out, "Output path (default stdout)");

    auto* train = app.add_subcommand("train-oracle", "Train a heavy-hitter oracle and write it as an oracle file");
    train->add_option("--config", config, "Experiment config (JSON)");
    train->add_option("--out", out, "Output path (default stdout)");

    auto* run = app.add_subcommand("run", "Run the configured sweep and emit metric rows");
    run->add_option("--config", config, "Experiment config (JSON)");
    run->add_option("--out", out, "Result path; a .meta.json sidecar is written next to it");
    run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    run->add_option("--seed", seed, "Estimator seed (overrides the config)");
    run->add_option("--threads", threads, "Worker threads for independent sweep points")->check(CLI::PositiveNumber);

    auto* verify = app.add_subcommand("verify", "Run quick deterministic self-checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*gen) return cmd_generate(config, out);
        if (*train) return cmd_train(config, out);
        if (*run) return cmd_run(config, out, format, seed, threads);
        if (*verify) return cmd_verify();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return invariant_error;
    }
    return ok;
}
