#pragma once

#include "qgraph/errors.hpp"
#include "qgraph/fixtures.hpp"
#include "qgraph/interval_map.hpp"
#include "qgraph/observable.hpp"
#include "qgraph/tolerances.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace qgraph {

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad JSON in '" + path + "': " + e.what());
    }
    return j;
}

struct LevelRange {
    int lo = 1;
    int hi = 1;

    static LevelRange parse(const std::string& text) {
        LevelRange r;
        const auto dots = text.find("..");
        try {
            if (dots == std::string::npos) {
                r.lo = r.hi = std::stoi(text);
            } else {
                r.lo = std::stoi(text.substr(0, dots));
                r.hi = std::stoi(text.substr(dots + 2));
            }
        } catch (const std::exception&) {
            throw ConfigError("bad level range '" + text + "' (expected 'n' or 'a..b')");
        }
        if (r.lo < 0 || r.hi < r.lo) throw ConfigError("bad level range '" + text + "'");
        return r;
    }

    std::string str() const { return std::to_string(lo) + ".." + std::to_string(hi); }
};

/// One reproducible run: pipeline name plus everything the pipeline needs.
/// The manifest a run writes is itself a valid config.
struct ExperimentConfig {
    std::string pipeline;                  // validate|dump-b|quantize|sweep|egorov|oracle|metric-check
    nlohmann::json map_spec;               // inline map object, or a string (builtin / file path)
    nlohmann::json observable_spec;        // observable object (optional for some pipelines)
    LevelRange levels{1, 1};
    std::string t_rule = "n";              // "n" or a fixed integer
    std::uint64_t seed = 0;
    std::string scheme = "fourier";        // fourier|user
    std::optional<std::string> phases_path;  // per-class unitary blocks for scheme=user
    std::string out;                       // primary artifact path
    std::string format = "csv";            // csv|json|binary depending on pipeline
    int bonds = 4;                         // metric-check
    double lambda_spacings = 200.0;        // metric-check window, in mean spacings
    double grid_step = 0.0;                // metric-check lambda grid (0 = default)
    int horizon = 0;                       // oracle: fixed T (0 = level+1)
    nlohmann::json tolerance_overrides;    // may only tighten

    PiecewiseLinearMap resolve_map() const {
        if (map_spec.is_string()) {
            const std::string name = map_spec.get<std::string>();
            if (name == "doubling" || name == "tent" || name == "tripling")
                return make_builtin_map(name);
            return PiecewiseLinearMap::from_json(load_json_file(name));
        }
        if (map_spec.is_object()) return PiecewiseLinearMap::from_json(map_spec);
        throw ConfigError("config needs a 'map' (builtin name, file path, or inline object)");
    }

    ObservableSpec resolve_observable() const {
        if (observable_spec.is_null()) throw ConfigError("config needs an 'observable'");
        if (observable_spec.is_string())
            return ObservableSpec::from_json(load_json_file(observable_spec.get<std::string>()));
        return ObservableSpec::from_json(observable_spec);
    }

    Tolerances resolve_tolerances() const {
        Tolerances tol;
        if (tolerance_overrides.is_object()) {
            if (tolerance_overrides.contains("unitarity"))
                tol.tighten_unitarity(tolerance_overrides["unitarity"].get<double>());
            if (tolerance_overrides.contains("moduli"))
                tol.tighten_moduli(tolerance_overrides["moduli"].get<double>());
            if (tolerance_overrides.contains("spectral_residual"))
                tol.tighten_spectral_residual(
                    tolerance_overrides["spectral_residual"].get<double>());
            if (tolerance_overrides.contains("root"))
                tol.tighten_root(tolerance_overrides["root"].get<double>());
        }
        return tol;
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        if (!j.is_object() || !j.contains("pipeline"))
            throw ConfigError("config must be an object with a 'pipeline' field");
        c.pipeline = j.at("pipeline").get<std::string>();
        if (j.contains("map")) c.map_spec = j.at("map");
        if (j.contains("observable")) c.observable_spec = j.at("observable");
        if (j.contains("levels")) c.levels = LevelRange::parse(j.at("levels").get<std::string>());
        if (j.contains("T_rule")) c.t_rule = j.at("T_rule").get<std::string>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("scheme")) c.scheme = j.at("scheme").get<std::string>();
        if (j.contains("phases")) c.phases_path = j.at("phases").get<std::string>();
        if (j.contains("out")) c.out = j.at("out").get<std::string>();
        if (j.contains("format")) c.format = j.at("format").get<std::string>();
        if (j.contains("bonds")) c.bonds = j.at("bonds").get<int>();
        if (j.contains("lambda_max_spacings"))
            c.lambda_spacings = j.at("lambda_max_spacings").get<double>();
        if (j.contains("grid_step")) c.grid_step = j.at("grid_step").get<double>();
        if (j.contains("T")) c.horizon = j.at("T").get<int>();
        if (j.contains("tolerances")) c.tolerance_overrides = j.at("tolerances");
        return c;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["pipeline"] = pipeline;
        if (!map_spec.is_null()) j["map"] = map_spec;
        if (!observable_spec.is_null()) j["observable"] = observable_spec;
        j["levels"] = levels.str();
        j["T_rule"] = t_rule;
        j["seed"] = seed;
        j["scheme"] = scheme;
        if (phases_path) j["phases"] = *phases_path;
        if (!out.empty()) j["out"] = out;
        j["format"] = format;
        if (pipeline == "metric-check") {
            j["bonds"] = bonds;
            j["lambda_max_spacings"] = lambda_spacings;
            if (grid_step > 0.0) j["grid_step"] = grid_step;
        }
        if (horizon > 0) j["T"] = horizon;
        if (!tolerance_overrides.is_null()) j["tolerances"] = tolerance_overrides;
        return j;
    }
};

}  // namespace qgraph
