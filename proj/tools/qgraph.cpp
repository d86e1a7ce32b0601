// Command-line front end: each subcommand builds an ExperimentConfig and
// hands it to the pipeline runner; `run` replays a config or manifest file.

#include "qgraph/pipelines.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

namespace {

int execute(const qgraph::ExperimentConfig& config) {
    try {
        qgraph::pipelines::run(config);
        return 0;
    } catch (const qgraph::ConfigError& e) {
        std::cerr << nlohmann::json{{"error", {{"type", "config"}, {"message", e.what()}}}}
                  << "\n";
        return 2;
    } catch (const qgraph::ResourceError& e) {
        std::cerr << nlohmann::json{{"error", {{"type", "resource"}, {"message", e.what()}}}}
                  << "\n";
        return 4;
    } catch (const qgraph::DomainError& e) {
        std::cerr << nlohmann::json{{"error", {{"type", "config"}, {"message", e.what()}}}}
                  << "\n";
        return 2;
    } catch (const qgraph::Error& e) {
        std::cerr << nlohmann::json{{"error", {{"type", "numerical"}, {"message", e.what()}}}}
                  << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", {{"type", "internal"}, {"message", e.what()}}}}
                  << "\n";
        return 3;
    }
}

/// Map argument: builtin name, path to a JSON file, or inline JSON object.
nlohmann::json parse_map_argument(const std::string& text) {
    if (!text.empty() && text.front() == '{') return nlohmann::json::parse(text);
    return text;
}

nlohmann::json parse_observable_argument(const std::string& text) {
    if (!text.empty() && text.front() == '{') return nlohmann::json::parse(text);
    return text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantized interval maps: exact transfer matrices, unitary propagators, "
                 "eigenvector statistics, and metric-graph spectra"};
    app.require_subcommand(1);

    qgraph::ExperimentConfig config;
    std::string map_arg, obs_arg, levels_arg = "1..1", levels_single = "0";

    auto add_common = [&](CLI::App* cmd, bool needs_obs) {
        cmd->add_option("--map", map_arg, "builtin name (doubling|tent|tripling), JSON file, or inline JSON")
            ->required();
        if (needs_obs)
            cmd->add_option("--obs", obs_arg, "observable JSON file or inline JSON")->required();
        cmd->add_option("--seed", config.seed, "random seed (default 0)");
        cmd->add_option("--out", config.out, "output path")->required();
    };

    auto* validate = app.add_subcommand("validate", "check measure preservation and endpoint invariance");
    validate->add_option("--map", map_arg, "map to validate")->required();
    validate->add_option("--out", config.out, "optional JSON report path");

    auto* dump_b = app.add_subcommand("dump-b", "export the exact transition matrix as CSV");
    add_common(dump_b, false);
    dump_b->add_option("--level", levels_single, "refinement level n")->required();

    auto* quant = app.add_subcommand("quantize", "build the unitary propagator");
    add_common(quant, false);
    quant->add_option("--level", levels_single, "refinement level n")->required();
    quant->add_option("--scheme", config.scheme, "fourier|user (default fourier)");
    std::string phases;
    quant->add_option("--phases", phases, "per-class unitary blocks (JSON), for --scheme user");
    quant->add_option("--format", config.format, "csv|binary (default csv)");

    auto* sweep = app.add_subcommand("sweep", "variance sweep across refinement levels");
    add_common(sweep, true);
    sweep->add_option("--levels", levels_arg, "level range a..b")->required();
    sweep->add_option("--T-rule", config.t_rule, "'n' or a fixed integer T (default n)");

    auto* egorov = app.add_subcommand("egorov", "conjugation-defect scaling across levels");
    add_common(egorov, true);
    egorov->add_option("--levels", levels_arg, "level range a..b")->required();
    egorov->add_option("--format", config.format, "csv|json (default csv)");

    auto* oracle = app.add_subcommand("oracle", "dual-route cross-checks at one level");
    add_common(oracle, true);
    oracle->add_option("--level", levels_single, "refinement level n")->required();
    oracle->add_option("--T", config.horizon, "trajectory horizon (default level+1)");

    auto* metric = app.add_subcommand("metric-check", "metric-graph spectral variance comparison");
    metric->add_option("--bonds", config.bonds, "number of directed bonds (default 4)");
    metric->add_option("--seed", config.seed, "seed for S0 and the bond lengths");
    metric->add_option("--lambda-max-spacings", config.lambda_spacings,
                       "window length in mean level spacings (default 200)");
    metric->add_option("--grid-step", config.grid_step, "lambda grid step (default pi/(10 Tr L))");
    metric->add_option("--out", config.out, "output CSV path")->required();

    auto* run_cmd = app.add_subcommand("run", "execute a config or manifest file");
    std::string config_path;
    run_cmd->add_option("--config", config_path, "experiment config JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            return execute(qgraph::ExperimentConfig::from_json(qgraph::load_json_file(config_path)));
        }
        if (validate->parsed()) {
            config.pipeline = "validate";
            config.map_spec = parse_map_argument(map_arg);
        } else if (dump_b->parsed()) {
            config.pipeline = "dump-b";
            config.map_spec = parse_map_argument(map_arg);
            config.levels = qgraph::LevelRange::parse(levels_single);
        } else if (quant->parsed()) {
            config.pipeline = "quantize";
            config.map_spec = parse_map_argument(map_arg);
            config.levels = qgraph::LevelRange::parse(levels_single);
            if (!phases.empty()) config.phases_path = phases;
        } else if (sweep->parsed()) {
            config.pipeline = "sweep";
            config.map_spec = parse_map_argument(map_arg);
            config.observable_spec = parse_observable_argument(obs_arg);
            config.levels = qgraph::LevelRange::parse(levels_arg);
        } else if (egorov->parsed()) {
            config.pipeline = "egorov";
            config.map_spec = parse_map_argument(map_arg);
            config.observable_spec = parse_observable_argument(obs_arg);
            config.levels = qgraph::LevelRange::parse(levels_arg);
        } else if (oracle->parsed()) {
            config.pipeline = "oracle";
            config.map_spec = parse_map_argument(map_arg);
            config.observable_spec = parse_observable_argument(obs_arg);
            config.levels = qgraph::LevelRange::parse(levels_single);
        } else if (metric->parsed()) {
            config.pipeline = "metric-check";
        }
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", {{"type", "config"}, {"message", e.what()}}}}
                  << "\n";
        return 2;
    }
    return execute(config);
}
