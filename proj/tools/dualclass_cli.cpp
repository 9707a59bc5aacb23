#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dualclass/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dualclass;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string only;
};

fs::path output_root(const Options& opt, const RunConfig* config) {
    if (!opt.out.empty()) {
        return opt.out;
    }
    if (config != nullptr && !config->output_dir.empty()) {
        return config->output_dir;
    }
    if (const char* env = std::getenv("DUALCLASS_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return "out";
}

RunConfig load_config(const Options& opt) {
    RunConfig config = RunConfig::load(opt.config);
    if (opt.seed) {
        config.seed = *opt.seed;
    }
    return config;
}

int finish(const OutputSink& sink, const std::string& command, const CommandResult& result) {
    write_manifest(sink, command, result);
    for (const auto& f : result.failures) {
        std::cerr << "failed: " << f << '\n';
    }
    for (const auto& s : result.skipped) {
        std::cerr << "skipped: " << s << '\n';
    }
    std::cout << sink.records().size() << " files written to " << sink.root().string() << '\n';
    if (!result.ok()) {
        std::cerr << result.failures.size() << " failed, " << result.skipped.size() << " skipped\n";
        return 1;
    }
    return 0;
}

int run_config_command(const Options& opt, const std::string& command, std::optional<Analysis> fixed) {
    RunConfig config = load_config(opt);
    Analysis analysis = fixed ? *fixed : config.analysis;
    if (!fixed && !opt.only.empty()) {
        analysis = parse_analysis(opt.only);
    }
    OutputSink sink(output_root(opt, &config));
    return finish(sink, command, run_analysis(config, analysis, sink));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-class share premiums, wavelet coherence and LSTM forecasts"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opt.config, "JSON run configuration");
        if (needs_config) {
            c->required()->check(CLI::ExistingFile);
        }
        sub->add_option("--seed", opt.seed, "master seed (overrides the config)");
        sub->add_option("--out", opt.out, "output directory (default: config, then $DUALCLASS_OUT, then ./out)");
    };

    auto* premiums = app.add_subcommand("premiums", "premium series and summary statistics per pair");
    auto* coherence = app.add_subcommand("coherence", "wavelet coherence CSV and SVG per pair");
    auto* forecast = app.add_subcommand("forecast", "LSTM forecast grid");
    auto* report = app.add_subcommand("report", "rebuild forecast grids from run manifests");
    auto* run = app.add_subcommand("run", "run the analyses selected in the config");
    auto* synth = app.add_subcommand("synth", "write a synthetic three-class dataset and config");
    for (auto* sub : {premiums, coherence, forecast, run}) {
        add_common(sub, true);
    }
    run->add_option("--only", opt.only, "premiums | coherence | forecast | all");
    report->add_option("--out", opt.out, "output directory holding forecast/runs");

    SyntheticSpec synth_spec;
    std::string synth_dir = "synthetic";
    synth->add_option("--dir", synth_dir, "directory for the generated CSVs and config.json");
    synth->add_option("--length", synth_spec.length, "observations per ticker");
    synth->add_option("--seed", synth_spec.seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*premiums) {
            return run_config_command(opt, "premiums", Analysis::premiums);
        }
        if (*coherence) {
            return run_config_command(opt, "coherence", Analysis::coherence);
        }
        if (*forecast) {
            return run_config_command(opt, "forecast", Analysis::forecast);
        }
        if (*run) {
            return run_config_command(opt, "run", std::nullopt);
        }
        if (*report) {
            OutputSink sink(output_root(opt, nullptr));
            return finish(sink, "report", cmd_report(sink));
        }
        if (*synth) {
            const auto inputs = write_synthetic_dataset(synth_dir, synth_spec);
            RunConfig config;
            config.tickers = inputs;
            for (auto& t : config.tickers) {
                t.path = fs::absolute(t.path);
            }
            config.forecast.train_size = synth_spec.length / 2;
            config.forecast.test_size = 30;
            const fs::path path = fs::path(synth_dir) / "config.json";
            std::ofstream(path) << config.to_json().dump(2) << '\n';
            std::cout << "wrote " << inputs.size() << " series and " << path.string() << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
