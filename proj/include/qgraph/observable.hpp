#pragma once

#include "qgraph/errors.hpp"
#include "qgraph/gauss.hpp"
#include "qgraph/interval_map.hpp"
#include "qgraph/partition.hpp"
#include "qgraph/rational.hpp"
#include "qgraph/stochastic_matrix.hpp"
#include "qgraph/tolerances.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qgraph {

/// Loads sample rows "x,phi(x)" (header line optional).
inline std::vector<std::pair<double, double>> load_table_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open observable table '" + path + "'");
    std::vector<std::pair<double, double>> samples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError("bad table row '" + line + "' (expected 'x,phi')");
        try {
            samples.emplace_back(std::stod(line.substr(0, comma)),
                                 std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            if (samples.empty()) continue;  // header line
            throw ConfigError("bad table row '" + line + "'");
        }
    }
    return samples;
}

/// How an observable function on [0,1] is specified.  The closed-form
/// catalogue is integrated analytically per atom; user tables define a
/// piecewise-linear interpolant integrated by composite Gauss quadrature.
struct ObservableSpec {
    enum class Kind { cosine, linear, indicator, constant, user_table };

    Kind kind = Kind::linear;
    int harmonic = 1;                                   // cosine: cos(2*pi*k*x)
    Rational lo, hi;                                    // indicator bounds
    double value = 0.0;                                 // constant
    std::vector<std::pair<double, double>> table;       // (x, phi(x)), x ascending, 0..1
    std::optional<double> declared_lipschitz;           // user tables only
    int gauss_order = 16;

    static ObservableSpec cosine(int k) {
        ObservableSpec s;
        s.kind = Kind::cosine;
        s.harmonic = k;
        return s;
    }
    static ObservableSpec linear() {
        ObservableSpec s;
        s.kind = Kind::linear;
        return s;
    }
    static ObservableSpec indicator(Rational a, Rational b) {
        ObservableSpec s;
        s.kind = Kind::indicator;
        s.lo = std::move(a);
        s.hi = std::move(b);
        return s;
    }
    static ObservableSpec constant(double c) {
        ObservableSpec s;
        s.kind = Kind::constant;
        s.value = c;
        return s;
    }
    static ObservableSpec user_table(std::vector<std::pair<double, double>> samples,
                                     std::optional<double> lipschitz = {}) {
        ObservableSpec s;
        s.kind = Kind::user_table;
        s.table = std::move(samples);
        s.declared_lipschitz = lipschitz;
        return s;
    }

    /// Analytic Lipschitz bound for the catalogue, declared one for tables.
    std::optional<double> lipschitz_bound() const {
        switch (kind) {
            case Kind::cosine: return 2.0 * std::numbers::pi * harmonic;
            case Kind::linear: return 1.0;
            case Kind::constant: return 0.0;
            case Kind::indicator: return std::nullopt;
            case Kind::user_table: return declared_lipschitz;
        }
        return std::nullopt;
    }

    std::string label() const {
        switch (kind) {
            case Kind::cosine: return "cosine_" + std::to_string(harmonic);
            case Kind::linear: return "linear";
            case Kind::indicator:
                return "indicator(" + format_rational(lo) + "," + format_rational(hi) + ")";
            case Kind::constant: return "constant";
            case Kind::user_table: return "user_table";
        }
        return "?";
    }

    static ObservableSpec from_json(const nlohmann::json& j) {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "cosine") {
            const int k = j.value("k", 1);
            if (k < 1) throw ConfigError("cosine observable needs k >= 1");
            return cosine(k);
        }
        if (kind == "linear") return linear();
        if (kind == "constant") return constant(j.value("c", 0.0));
        if (kind == "indicator")
            return indicator(parse_rational(j.at("a").get<std::string>()),
                             parse_rational(j.at("b").get<std::string>()));
        if (kind == "user_table") {
            std::vector<std::pair<double, double>> samples;
            if (j.contains("path"))
                samples = load_table_csv(j.at("path").get<std::string>());
            else
                for (const auto& row : j.at("samples"))
                    samples.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
            std::optional<double> lip;
            if (j.contains("lipschitz")) lip = j.at("lipschitz").get<double>();
            auto s = user_table(std::move(samples), lip);
            if (j.contains("gauss_order")) s.gauss_order = j.at("gauss_order").get<int>();
            return s;
        }
        throw ConfigError("unknown observable kind '" + kind + "'");
    }

    nlohmann::json to_json() const {
        switch (kind) {
            case Kind::cosine: return {{"kind", "cosine"}, {"k", harmonic}};
            case Kind::linear: return {{"kind", "linear"}};
            case Kind::constant: return {{"kind", "constant"}, {"c", value}};
            case Kind::indicator:
                return {{"kind", "indicator"},
                        {"a", format_rational(lo)},
                        {"b", format_rational(hi)}};
            case Kind::user_table: {
                nlohmann::json samples = nlohmann::json::array();
                for (const auto& [x, y] : table) samples.push_back({x, y});
                nlohmann::json out = {{"kind", "user_table"}, {"samples", std::move(samples)}};
                if (declared_lipschitz) out["lipschitz"] = *declared_lipschitz;
                if (gauss_order != 16) out["gauss_order"] = gauss_order;
                return out;
            }
        }
        return {};
    }
};

/// Diagonal quantization of an observable on a fixed partition: entry j is
/// the exact average of phi over atom E_j.  Immutable.
class Observable {
  public:
    Observable(Eigen::VectorXd diagonal, std::optional<double> lipschitz, std::string label)
        : diagonal_(std::move(diagonal)),
          lipschitz_(lipschitz),
          label_(std::move(label)),
          mean_(diagonal_.size() > 0 ? diagonal_.mean() : 0.0) {}

    static Observable from_diagonal(Eigen::VectorXd diagonal,
                                    std::optional<double> lipschitz = {},
                                    std::string label = "sampled") {
        return Observable(std::move(diagonal), lipschitz, std::move(label));
    }

    std::int64_t size() const { return diagonal_.size(); }
    const Eigen::VectorXd& diagonal() const { return diagonal_; }
    double entry(std::int64_t j) const { return diagonal_(j - 1); }
    double mean() const { return mean_; }
    std::optional<double> lipschitz_bound() const { return lipschitz_; }
    const std::string& label() const { return label_; }

    /// Same observable shifted to zero mean.
    Observable centered() const {
        return Observable(diagonal_.array() - mean_, lipschitz_, label_ + "(centered)");
    }

  private:
    Eigen::VectorXd diagonal_;
    std::optional<double> lipschitz_;
    std::string label_;
    double mean_;
};

namespace detail {

/// Integral of the piecewise-linear interpolant of `table` over [a,b] by
/// composite Gauss quadrature with panels split at the table knots, plus a
/// doubled-order error estimate.
inline std::pair<double, double> table_integral(
    const std::vector<std::pair<double, double>>& table, double a, double b, int order) {
    if (table.size() < 2) throw ConfigError("user table needs at least two samples");
    for (std::size_t i = 0; i + 1 < table.size(); ++i)
        if (!(table[i].first < table[i + 1].first))
            throw ConfigError("user table abscissae must be strictly increasing");
    if (table.front().first > a + 1e-15 || table.back().first < b - 1e-15)
        throw ConfigError("user table does not cover the requested interval");

    const auto interp = [&](double x) {
        auto it = std::upper_bound(table.begin(), table.end(), x,
                                   [](double v, const auto& s) { return v < s.first; });
        if (it == table.begin()) return table.front().second;
        if (it == table.end()) return table.back().second;
        const auto& [x1, y1] = *(it - 1);
        const auto& [x2, y2] = *it;
        return y1 + (y2 - y1) * (x - x1) / (x2 - x1);
    };

    std::vector<double> cuts{a};
    for (const auto& [x, y] : table)
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);

    const GaussRule& coarse = gauss_legendre(order);
    const GaussRule& fine = gauss_legendre(2 * order);
    double value = 0.0, refined = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        value += gauss_integrate(interp, cuts[i], cuts[i + 1], coarse);
        refined += gauss_integrate(interp, cuts[i], cuts[i + 1], fine);
    }
    return {value, std::abs(value - refined)};
}

inline Rational overlap_length(const Rational& a1, const Rational& b1, const Rational& a2,
                               const Rational& b2) {
    const Rational lo = a1 > a2 ? a1 : a2;
    const Rational hi = b1 < b2 ? b1 : b2;
    return hi > lo ? hi - lo : Rational(0);
}

}  // namespace detail

/// O_jj = M * integral of phi over E_j.  Closed-form kinds are integrated
/// analytically; user tables by quadrature with an error gate.
inline Observable quantize_observable(const ObservableSpec& spec, const Partition& partition,
                                      const Tolerances& tol = {}) {
    const std::int64_t m = partition.atom_count();
    Eigen::VectorXd diag(m);
    const double md = static_cast<double>(m);

    switch (spec.kind) {
        case ObservableSpec::Kind::cosine: {
            const double w = 2.0 * std::numbers::pi * spec.harmonic;
            for (std::int64_t j = 1; j <= m; ++j) {
                const double a = static_cast<double>(j - 1) / md;
                const double b = static_cast<double>(j) / md;
                diag(j - 1) = md * (std::sin(w * b) - std::sin(w * a)) / w;
            }
            break;
        }
        case ObservableSpec::Kind::linear:
            for (std::int64_t j = 1; j <= m; ++j)
                diag(j - 1) = to_double(partition.atom_midpoint(j));
            break;
        case ObservableSpec::Kind::indicator:
            for (std::int64_t j = 1; j <= m; ++j)
                diag(j - 1) = to_double(detail::overlap_length(partition.atom_left(j),
                                                               partition.atom_right(j), spec.lo,
                                                               spec.hi) *
                                        m);
            break;
        case ObservableSpec::Kind::constant:
            diag.setConstant(spec.value);
            break;
        case ObservableSpec::Kind::user_table:
            for (std::int64_t j = 1; j <= m; ++j) {
                const auto [value, err] =
                    detail::table_integral(spec.table, static_cast<double>(j - 1) / md,
                                           static_cast<double>(j) / md, spec.gauss_order);
                if (err > tol.quadrature)
                    throw PrecisionError("atom-average quadrature error " + std::to_string(err) +
                                         " above tolerance on atom " + std::to_string(j));
                diag(j - 1) = md * value;
            }
            break;
    }
    return Observable(std::move(diag), spec.lipschitz_bound(), spec.label());
}

/// Direct quantization of the composition phi(S(x)): the per-branch affine
/// substitution is integrated in closed form (or through the table's image
/// interval), without touching the transition matrix.
inline Observable quantize_composed(const ObservableSpec& spec, const PiecewiseLinearMap& map,
                                    const Partition& partition, const Tolerances& tol = {}) {
    if (partition.primary_atom_count() != map.primary_atom_count())
        throw ContractError("partition was built for a different map");
    const std::int64_t m = partition.atom_count();
    Eigen::VectorXd diag(m);
    const double md = static_cast<double>(m);

    for (std::int64_t j = 1; j <= m; ++j) {
        const Rational left = partition.atom_left(j);
        const Rational right = partition.atom_right(j);
        const Branch& br =
            map.branches()[static_cast<std::size_t>(map.branch_index_at(left) - 1)];
        const double s = static_cast<double>(br.slope);
        const double c = to_double(br.intercept);
        switch (spec.kind) {
            case ObservableSpec::Kind::cosine: {
                const double w = 2.0 * std::numbers::pi * spec.harmonic;
                const double a = to_double(left), b = to_double(right);
                diag(j - 1) = md * (std::sin(w * (s * b + c)) - std::sin(w * (s * a + c))) / (w * s);
                break;
            }
            case ObservableSpec::Kind::linear:
                diag(j - 1) = s * to_double(partition.atom_midpoint(j)) + c;
                break;
            case ObservableSpec::Kind::indicator: {
                const Rational y1 = br.slope * left + br.intercept;
                const Rational y2 = br.slope * right + br.intercept;
                const Rational lo = y1 < y2 ? y1 : y2;
                const Rational hi = y1 < y2 ? y2 : y1;
                const std::int64_t abs_slope = br.slope < 0 ? -br.slope : br.slope;
                diag(j - 1) =
                    to_double(detail::overlap_length(lo, hi, spec.lo, spec.hi) * m / abs_slope);
                break;
            }
            case ObservableSpec::Kind::constant:
                diag(j - 1) = spec.value;
                break;
            case ObservableSpec::Kind::user_table: {
                const Rational y1 = br.slope * left + br.intercept;
                const Rational y2 = br.slope * right + br.intercept;
                const double lo = to_double(y1 < y2 ? y1 : y2);
                const double hi = to_double(y1 < y2 ? y2 : y1);
                const auto [value, err] =
                    detail::table_integral(spec.table, lo, hi, spec.gauss_order);
                if (err > tol.quadrature)
                    throw PrecisionError("composed atom-average quadrature error above tolerance");
                diag(j - 1) = md * value / std::abs(s);
                break;
            }
        }
    }
    std::optional<double> lip = spec.lipschitz_bound();
    if (lip) {
        std::int64_t max_slope = 1;
        for (const auto& b : map.branches())
            max_slope = std::max(max_slope, b.slope < 0 ? -b.slope : b.slope);
        lip = *lip * static_cast<double>(max_slope);
    }
    return Observable(std::move(diag), lip, spec.label() + ".S");
}

/// Diagonal of B * diag(O): the atom averages of phi composed with the map,
/// obtained through the transition matrix.
inline Observable classical_pushforward(const StochasticMatrix& b, const Observable& o) {
    if (b.size() != o.size())
        throw ContractError("pushforward: observable and matrix dimensions differ");
    Eigen::VectorXd diag(o.size());
    for (std::int64_t j = 1; j <= b.size(); ++j) {
        double acc = 0.0;
        for (const auto& [col, value] : b.row(j)) acc += to_double(value) * o.entry(col);
        diag(j - 1) = acc;
    }
    // a Lipschitz bound for phi(S(x)) would need the map's slopes
    return Observable(std::move(diag), std::nullopt, o.label() + ".B");
}

}  // namespace qgraph
