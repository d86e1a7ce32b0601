#pragma once

#include "qgraph/classical.hpp"
#include "qgraph/config.hpp"
#include "qgraph/csv.hpp"
#include "qgraph/egorov.hpp"
#include "qgraph/metric_graph.hpp"
#include "qgraph/spectral.hpp"

#include <chrono>
#include <complex>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace qgraph {

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << j.dump(2) << '\n';
}

namespace pipelines {

inline TimeRule parse_time_rule(const std::string& text) {
    if (text == "n") return TimeRule::level_rule();
    try {
        const int t = std::stoi(text);
        if (t < 1) throw ConfigError("fixed T must be >= 1");
        return TimeRule::fixed_rule(t);
    } catch (const std::invalid_argument&) {
        throw ConfigError("bad T rule '" + text + "' (expected 'n' or an integer)");
    }
}

inline void run_validate(const ExperimentConfig& config) {
    const PiecewiseLinearMap map = config.resolve_map();
    const ValidationReport report = validate_map(map);
    nlohmann::json j;
    j["measure_preserving"] = report.measure_preserving;
    j["endpoints_forward_invariant"] = report.endpoints_forward_invariant;
    j["slopes"] = report.slopes;
    j["lcm_slope"] = report.lcm_slope;
    j["failures"] = report.failures;
    if (!config.out.empty()) write_json_file(config.out, j);
    if (!report.ok()) throw NumericalError("map failed validation", 0.0);
}

inline void run_dump_b(const ExperimentConfig& config) {
    const PiecewiseLinearMap map = config.resolve_map();
    const Partition partition = build_partition(map, config.levels.lo);
    const StochasticMatrix b = transition_matrix(map, partition);
    CsvWriter csv(config.out);
    csv.row({"row", "col", "value"});
    for (std::int64_t j = 1; j <= b.size(); ++j)
        for (const auto& [col, value] : b.row(j))
            csv.row({std::to_string(j), std::to_string(col), format_rational(value)});
}

inline std::vector<Eigen::MatrixXcd> load_phase_blocks(const std::string& path) {
    const nlohmann::json j = load_json_file(path);
    std::vector<Eigen::MatrixXcd> blocks;
    for (const auto& jb : j.at("blocks")) {
        const auto rows = static_cast<std::int64_t>(jb.size());
        Eigen::MatrixXcd block(rows, rows);
        for (std::int64_t r = 0; r < rows; ++r) {
            const auto& jr = jb.at(static_cast<std::size_t>(r));
            if (static_cast<std::int64_t>(jr.size()) != rows)
                throw ConfigError("phase blocks must be square");
            for (std::int64_t c = 0; c < rows; ++c)
                block(r, c) = std::complex<double>(jr.at(static_cast<std::size_t>(c)).at("re"),
                                                   jr.at(static_cast<std::size_t>(c)).at("im"));
        }
        blocks.push_back(std::move(block));
    }
    return blocks;
}

inline void run_quantize(const ExperimentConfig& config) {
    const PiecewiseLinearMap map = config.resolve_map();
    const Partition partition = build_partition(map, config.levels.lo);
    if (partition.atom_count() > 4096)
        throw ResourceError("dense quantization capped at M = 4096 atoms");
    const StochasticMatrix b = transition_matrix(map, partition);
    const EquivalenceClasses classes = equivalence_classes(b);
    const Tolerances tol = config.resolve_tolerances();

    UnitaryPropagator u = [&] {
        if (config.scheme == "fourier")
            return quantize(b, classes, PhaseScheme::fourier, nullptr, tol);
        if (config.scheme == "user") {
            if (!config.phases_path)
                throw ConfigError("scheme 'user' needs --phases with per-class blocks");
            const auto blocks = load_phase_blocks(*config.phases_path);
            return quantize(b, classes, PhaseScheme::user_supplied, &blocks, tol);
        }
        throw ConfigError("unknown scheme '" + config.scheme + "' (fourier|user)");
    }();

    if (config.format == "csv") {
        CsvWriter csv(config.out);
        csv.row({"row", "col", "re", "im"});
        for (std::int64_t j = 1; j <= u.size(); ++j)
            for (std::int64_t k = 1; k <= u.size(); ++k) {
                const std::complex<double> z = u.matrix()(j - 1, k - 1);
                if (z == std::complex<double>(0.0, 0.0)) continue;
                csv.row({std::to_string(j), std::to_string(k), format_double17(z.real()),
                         format_double17(z.imag())});
            }
    } else if (config.format == "binary") {
        std::ofstream out(config.out, std::ios::binary);
        if (!out) throw ConfigError("cannot open output file '" + config.out + "'");
        out.write("QGU1", 4);
        const std::int64_t m = u.size();
        out.write(reinterpret_cast<const char*>(&m), sizeof(m));
        for (std::int64_t j = 0; j < m; ++j)
            for (std::int64_t k = 0; k < m; ++k) {
                const std::complex<double> z = u.matrix()(j, k);
                const double re = z.real(), im = z.imag();
                out.write(reinterpret_cast<const char*>(&re), sizeof(re));
                out.write(reinterpret_cast<const char*>(&im), sizeof(im));
            }
    } else {
        throw ConfigError("unknown quantize format '" + config.format + "' (csv|binary)");
    }
}

inline void run_sweep(const ExperimentConfig& config) {
    const PiecewiseLinearMap map = config.resolve_map();
    const ObservableSpec spec = config.resolve_observable();
    const Tolerances tol = config.resolve_tolerances();
    const TimeRule rule = parse_time_rule(config.t_rule);
    const auto reports =
        qe_sweep(map, spec, config.levels.lo, config.levels.hi, rule, tol);
    CsvWriter csv(config.out);
    csv.row({"n", "M", "mean", "V_n", "T", "K", "K_diag", "V_T_classical"});
    for (const auto& report : reports)
        for (const auto& point : report.curve)
            csv.row({std::to_string(report.level), std::to_string(report.atom_count),
                     format_double17(report.quantum_mean), format_double17(report.variance),
                     std::to_string(point.horizon), format_double17(point.majorant),
                     format_double17(point.diagonal), format_double17(point.classical)});
}

inline void run_egorov(const ExperimentConfig& config) {
    const PiecewiseLinearMap map = config.resolve_map();
    const ObservableSpec spec = config.resolve_observable();
    const Tolerances tol = config.resolve_tolerances();
    const EgorovScaling scaling =
        egorov_scaling(map, spec, config.levels.lo, config.levels.hi, tol);

    if (config.format == "json") {
        nlohmann::json j;
        j["levels"] = nlohmann::json::array();
        for (const auto& r : scaling.levels)
            j["levels"].push_back({{"n", r.level},
                                   {"M", r.atom_count},
                                   {"defect", r.defect},
                                   {"block_max", r.block_max}});
        if (scaling.fitted_exponent) j["fitted_exponent"] = *scaling.fitted_exponent;
        if (scaling.implied_constant) j["implied_constant"] = *scaling.implied_constant;
        j["degenerate_zero"] = scaling.degenerate_zero;
        write_json_file(config.out, j);
        return;
    }
    CsvWriter csv(config.out);
    csv.row({"n", "M", "defect", "block_max", "fitted_exponent"});
    for (std::size_t i = 0; i < scaling.levels.size(); ++i) {
        const auto& r = scaling.levels[i];
        const bool last = i + 1 == scaling.levels.size();
        std::string exponent;
        if (last)
            exponent = scaling.degenerate_zero ? "degenerate: zero defect"
                                               : format_double17(*scaling.fitted_exponent);
        csv.row({std::to_string(r.level), std::to_string(r.atom_count),
                 format_double17(r.defect), format_double17(r.block_max), exponent});
    }
}

/// Cross-check battery: dual-route identities at one level, emitted as JSON.
inline void run_oracle(const ExperimentConfig& config) {
    const PiecewiseLinearMap map = config.resolve_map();
    const ObservableSpec spec = config.resolve_observable();
    const Tolerances tol = config.resolve_tolerances();
    const int level = config.levels.lo;
    const int horizon = config.horizon > 0 ? config.horizon : level + 1;

    const Partition partition = build_partition(map, level);
    const StochasticMatrix b = transition_matrix(map, partition);
    const EquivalenceClasses classes = equivalence_classes(b);
    const UnitaryPropagator u = quantize(b, classes, PhaseScheme::fourier, nullptr, tol);
    const Observable o = quantize_observable(spec, partition, tol).centered();
    const std::int64_t m = partition.atom_count();

    nlohmann::json checks = nlohmann::json::array();
    const auto push = [&](const std::string& name, double error, double bound) {
        checks.push_back({{"name", name},
                          {"max_abs_error", error},
                          {"tolerance", bound},
                          {"pass", error <= bound}});
    };

    // trajectory totals against the matrix product U^T O_T
    Eigen::MatrixXcd time_avg = o.diagonal().cast<std::complex<double>>().asDiagonal();
    Eigen::MatrixXcd power = time_avg;
    for (int t = 1; t < horizon; ++t) {
        power = u.matrix().adjoint() * power * u.matrix();
        time_avg += power;
    }
    time_avg /= static_cast<double>(horizon);
    Eigen::MatrixXcd u_pow = Eigen::MatrixXcd::Identity(m, m);
    for (int t = 0; t < horizon; ++t) u_pow = u.matrix() * u_pow;
    const Eigen::MatrixXcd s_t = u_pow * time_avg;

    double trajectory_error = 0.0;
    double moduli_error = 0.0;
    for (std::int64_t s = 1; s <= m; ++s)
        for (std::int64_t f = 1; f <= m; ++f) {
            const TrajectorySum sum = trajectory_sum(u, o, s, f, horizon);
            trajectory_error =
                std::max(trajectory_error, std::abs(sum.total - s_t(s - 1, f - 1)));
            for (const auto& term : sum.terms) {
                const Rational measure = path_measure(
                    b, std::span<const std::int64_t>(term.path.data(), term.path.size()));
                moduli_error = std::max(moduli_error, std::abs(std::norm(term.amplitude) -
                                                               to_double(measure)));
            }
        }
    push("trajectory_sum_vs_matrix_product", trajectory_error, tol.diag_match);
    push("amplitude_moduli_vs_path_measure", moduli_error, tol.moduli);

    // exactness window and diagonal identity
    double window_error = 0.0;
    for (int t = 1; t <= level; ++t)
        window_error = std::max(
            window_error, std::abs(majorant_K(u, o, t) - diagonal_K(b, o, t)));
    if (level >= 1) push("diagonal_exactness_window", window_error, tol.exact_identity(m));
    double classical_error = 0.0;
    for (int t = 1; t <= horizon; ++t)
        classical_error = std::max(classical_error, std::abs(diagonal_K(b, o, t) -
                                                             classical_time_variance(b, o, t)));
    push("diagonal_vs_classical_variance", classical_error, tol.exact_identity(m));

    const SpectralData spectral = eigenbasis(u, tol);
    const auto [mean, variance] = quantum_moments(spectral, o, tol);
    push("quantum_mean_vs_trace", std::abs(mean - o.mean()), tol.mean_identity);

    nlohmann::json j;
    j["level"] = level;
    j["M"] = m;
    j["T"] = horizon;
    j["V_n"] = variance;
    j["checks"] = std::move(checks);
    bool all_pass = true;
    for (const auto& c : j["checks"]) all_pass = all_pass && c["pass"].get<bool>();
    j["pass"] = all_pass;
    write_json_file(config.out, j);
    if (!all_pass) throw NumericalError("oracle cross-checks failed", 0.0);
}

inline void run_metric_check(const ExperimentConfig& config) {
    const Tolerances tol = config.resolve_tolerances();
    const MetricGraph graph = random_metric_graph(config.bonds, config.seed);
    Eigen::MatrixXcd observable =
        Eigen::MatrixXcd::Zero(config.bonds, config.bonds);
    for (int b = 0; b < config.bonds; ++b) observable(b, b) = (b % 2 == 0) ? 1.0 : -1.0;
    if (config.bonds % 2 != 0)
        observable(config.bonds - 1, config.bonds - 1) -=
            observable.trace();  // keep it traceless for odd bond counts

    const double lambda_max = config.lambda_spacings * graph.mean_spacing();
    const MetricSpectrum spectrum = secular_eigenvalues(graph, lambda_max, &observable, tol);
    const auto [vs, vs_hat] = variance_VS(graph, observable, lambda_max, &spectrum, tol);
    const double vu = variance_VU_avg(graph, observable, lambda_max, config.grid_step);
    const double weighted = graph.mean_length() * vs_hat;
    const double residual = std::abs(weighted - vu) / std::max(std::abs(vu), 1e-300);

    CsvWriter csv(config.out);
    csv.row({"lambda_n", "bracket_k", "matrix_element", "weight"});
    for (const auto& root : spectrum.roots)
        csv.row({format_double17(root.lambda), std::to_string(root.branch),
                 format_double17(root.matrix_element), format_double17(root.weight)});
    csv.row({"SUMMARY", format_double17(weighted), format_double17(vu),
             format_double17(residual)});
}

/// Executes the configured pipeline and writes the manifest next to the
/// primary artifact.  Exceptions propagate to the caller (the CLI maps them
/// to exit codes).
inline void run(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    if (config.pipeline == "validate")
        run_validate(config);
    else if (config.pipeline == "dump-b")
        run_dump_b(config);
    else if (config.pipeline == "quantize")
        run_quantize(config);
    else if (config.pipeline == "sweep")
        run_sweep(config);
    else if (config.pipeline == "egorov")
        run_egorov(config);
    else if (config.pipeline == "oracle")
        run_oracle(config);
    else if (config.pipeline == "metric-check")
        run_metric_check(config);
    else
        throw ConfigError("unknown pipeline '" + config.pipeline + "'");

    if (!config.out.empty()) {
        nlohmann::json manifest = config.to_json();
        manifest["tool"] = {{"name", "qgraph"}, {"version", "0.1.0"}};
        manifest["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_json_file(config.out + ".manifest.json", manifest);
    }
}

}  // namespace pipelines
}  // namespace qgraph
