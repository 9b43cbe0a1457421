#include "copcp/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "copcp/dataio.hpp"
#include "copcp/error.hpp"
#include "copcp/eval.hpp"
#include "copcp/report_io.hpp"

namespace copcp {

namespace {

struct RunFlags {
    std::string config;
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::vector<std::string> copulas;
    std::optional<std::string> gumbel_estimator;
    std::vector<std::string> targets;
    std::optional<int> folds;
};

struct SynthFlags {
    long long n = 0;
    long long m = 0;
    long long d = 5;
    double dependence = 0.0;
    std::uint64_t seed = 0;
    std::string out;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

int cmd_run(const RunFlags& flags, std::ostream& out, std::ostream& err) {
    ExperimentConfig config;
    std::filesystem::path dataset;
    std::filesystem::path output;
    try {
        config = load_config(flags.config);
        const std::filesystem::path base = std::filesystem::path(flags.config).parent_path();

        if (const char* env = std::getenv("CC_SEED")) {
            std::uint64_t seed = 0;
            const auto* end = env + std::char_traits<char>::length(env);
            const auto [ptr, ec] = std::from_chars(env, end, seed);
            if (ec != std::errc() || ptr != end || ptr == env)
                throw ConfigError("seed", std::string("CC_SEED is not an unsigned integer: '") + env + "'");
            config.seed = seed;
        }
        if (flags.seed) config.seed = *flags.seed;
        if (flags.folds) config.folds = *flags.folds;
        if (!flags.targets.empty()) config.targets = flags.targets;
        if (!flags.copulas.empty()) {
            config.copulas.clear();
            for (const auto& name : flags.copulas) {
                try {
                    config.copulas.push_back(copula_kind_from_string(name));
                } catch (const Error& e) {
                    throw ConfigError("copula", e.detail(), "--copula");
                }
            }
        }
        if (flags.gumbel_estimator) {
            try {
                config.gumbel_estimator = gumbel_estimator_from_string(*flags.gumbel_estimator);
            } catch (const Error& e) {
                throw ConfigError("gumbel_estimator", e.detail(), "--gumbel-estimator");
            }
        }
        try {
            config.validate();
        } catch (const Error& e) {
            throw ConfigError("config", e.detail(), "command line");
        }

        if (config.dataset.empty()) throw ConfigError("dataset", "no dataset path given", flags.config);
        if (config.targets.empty()) throw ConfigError("targets", "no target columns given", flags.config);
        dataset = resolve(base, config.dataset);
        if (!std::filesystem::is_regular_file(dataset))
            throw ConfigError("dataset", "file not found: " + dataset.string(), flags.config);
        output = flags.out ? std::filesystem::path(*flags.out) : resolve(base, config.output_dir);
        config.output_dir = output.string();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    Dataset data;
    try {
        data = load_csv(dataset, config.targets);
    } catch (const Error& e) {
        err << "error: " << dataset.string() << ": " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        const ExperimentReport report = run_experiment(data, config, flags.jobs);
        std::set<std::string> warnings;
        for (const auto& fold : report.folds)
            for (const auto& c : fold.copulas)
                if (!c.warning.empty()) warnings.insert(c.warning);
        for (const auto& w : warnings) err << "warning: " << w << '\n';
        write_report_artifacts(output, report);
        out << format_summary(report);
        out << "wrote " << (output / "report.json").string() << ", " << (output / "curves.csv").string() << ", "
            << (output / "plots").string() << "/*.svg\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_synth(const SynthFlags& flags, std::ostream& out, std::ostream& err) {
    if (!(flags.dependence >= 0.0 && flags.dependence < 1.0)) {
        err << "error: --dependence must lie in [0, 1), got " << flags.dependence << '\n';
        return kExitUsage;
    }
    try {
        const Dataset data = synth_dataset(flags.n, flags.m, flags.d, flags.dependence, flags.seed);
        write_csv(flags.out, data);
        out << "wrote " << data.rows() << " rows (" << data.feature_dim() << " features, " << data.target_dim()
            << " targets) to " << flags.out << '\n';
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::Io ? kExitRuntime : kExitUsage;
    }
    return kExitOk;
}

int cmd_report(const std::string& path, std::ostream& out, std::ostream& err) {
    std::ifstream in(path);
    if (!in) {
        err << "error: cannot open " << path << '\n';
        return kExitUsage;
    }
    try {
        const auto j = nlohmann::json::parse(in);
        out << format_summary(report_from_json(j));
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << path << ": malformed JSON: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << path << ": " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Copula-calibrated conformal prediction for multi-target regression", "copcp"};
    app.require_subcommand(1);

    RunFlags run;
    auto* run_cmd = app.add_subcommand("run", "Cross-validated validity/efficiency experiment from a JSON config");
    run_cmd->add_option("--config", run.config, "Experiment config (JSON)")->required();
    run_cmd->add_option("--jobs", run.jobs, "Folds evaluated in parallel")->check(CLI::PositiveNumber);
    run_cmd->add_option("--seed", run.seed, "Override the config seed");
    run_cmd->add_option("--out", run.out, "Override the output directory");
    run_cmd->add_option("--copula", run.copulas, "independent | gumbel | empirical (repeatable)");
    run_cmd->add_option("--gumbel-estimator", run.gumbel_estimator, "tau | mple");
    run_cmd->add_option("--target", run.targets, "Target column (repeatable)");
    run_cmd->add_option("--folds", run.folds, "Override the fold count");

    SynthFlags synth;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset with shared-factor target noise");
    synth_cmd->add_option("--n", synth.n, "Rows")->required();
    synth_cmd->add_option("--m", synth.m, "Targets")->required();
    synth_cmd->add_option("--d", synth.d, "Features");
    synth_cmd->add_option("--dependence", synth.dependence, "Noise correlation in [0, 1)")->required();
    synth_cmd->add_option("--seed", synth.seed, "RNG seed")->required();
    synth_cmd->add_option("--out", synth.out, "Output CSV path")->required();

    std::string report_path;
    auto* report_cmd = app.add_subcommand("report", "Summarize a report.json");
    report_cmd->add_option("path", report_path, "report.json written by `run`")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    if (run_cmd->parsed()) return cmd_run(run, out, err);
    if (synth_cmd->parsed()) return cmd_synth(synth, out, err);
    return cmd_report(report_path, out, err);
}

}  // namespace copcp
