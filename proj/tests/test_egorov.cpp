#include "qgraph/egorov.hpp"
#include "qgraph/fixtures.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace qgraph;

namespace {

EgorovReport defect_at(const PiecewiseLinearMap& map, const ObservableSpec& spec, int level) {
    const auto partition = build_partition(map, level);
    const auto b = transition_matrix(map, partition);
    const auto u = quantize(b, equivalence_classes(b), PhaseScheme::fourier);
    EgorovReport report = egorov_defect(u, quantize_observable(spec, partition),
                                        quantize_composed(spec, map, partition));
    report.level = level;
    return report;
}

}  // namespace

TEST_CASE("constant observables commute exactly", "[egorov]") {
    const auto report = defect_at(make_tent_map(), ObservableSpec::constant(0.8), 3);
    CHECK(report.defect <= 1e-12);
}

TEST_CASE("the conjugated diagonal equals the pushforward", "[egorov]") {
    for (const auto* name : {"doubling", "tent", "tripling"}) {
        const auto map = make_builtin_map(name);
        const auto partition = build_partition(map, 2);
        const auto b = transition_matrix(map, partition);
        const auto u = quantize(b, equivalence_classes(b), PhaseScheme::fourier);
        const auto obs = quantize_observable(ObservableSpec::linear(), partition);
        const Eigen::MatrixXcd q = u.matrix() *
                                   obs.diagonal().cast<std::complex<double>>().asDiagonal() *
                                   u.matrix().adjoint();
        const auto pushed = classical_pushforward(b, obs);
        double worst = 0.0;
        for (std::int64_t j = 0; j < u.size(); ++j)
            worst = std::max(worst, std::abs(q(j, j) - pushed.diagonal()(j)));
        INFO(name);
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("defect halves when the partition doubles", "[egorov]") {
    const auto coarse = defect_at(make_doubling_map(), ObservableSpec::linear(), 2);
    const auto fine = defect_at(make_doubling_map(), ObservableSpec::linear(), 3);
    REQUIRE(coarse.defect > 0.0);
    const double ratio = fine.defect / coarse.defect;
    CHECK(ratio >= 0.35);
    CHECK(ratio <= 0.65);
}

TEST_CASE("defect respects the block bound and block structure", "[egorov]") {
    for (const auto* name : {"doubling", "tent"}) {
        const auto map = make_builtin_map(name);
        for (const auto& spec : {ObservableSpec::linear(), ObservableSpec::cosine(1)}) {
            for (int level = 1; level <= 4; ++level) {
                const auto report = defect_at(map, spec, level);
                INFO(name << " " << spec.label() << " level " << level);
                CHECK(report.defect <= report.block_max + 1e-10);
                // off-block vanishing is enforced inside egorov_defect; a
                // throw here would fail the test
            }
        }
    }
}

TEST_CASE("fitted exponent sits in the O(1/M) window", "[egorov]") {
    for (const auto* name : {"doubling", "tent"}) {
        const auto map = make_builtin_map(name);
        for (const auto& spec : {ObservableSpec::linear(), ObservableSpec::cosine(1)}) {
            const auto scaling = egorov_scaling(map, spec, 1, 6);
            INFO(name << " " << spec.label());
            REQUIRE(scaling.fitted_exponent.has_value());
            CHECK(*scaling.fitted_exponent >= -1.25);
            CHECK(*scaling.fitted_exponent <= -0.75);
            REQUIRE(scaling.implied_constant.has_value());
            for (const auto& r : scaling.levels)
                CHECK(r.defect <= *scaling.implied_constant * *spec.lipschitz_bound() /
                                      static_cast<double>(r.atom_count) +
                                  1e-12);
        }
    }
}

TEST_CASE("scaling run degenerates gracefully on constants", "[egorov]") {
    const auto scaling = egorov_scaling(make_tent_map(), ObservableSpec::constant(1.0), 1, 4);
    CHECK(scaling.degenerate_zero);
    CHECK_FALSE(scaling.fitted_exponent.has_value());
    CHECK_THROWS_AS(egorov_scaling(make_tent_map(), ObservableSpec::linear(), 1, 2),
                    ContractError);
    CHECK_THROWS_AS(
        egorov_scaling(make_tent_map(),
                       ObservableSpec::indicator(Rational(0), Rational(1, 2)), 1, 4),
        ContractError);
}

TEST_CASE("continuous non-Lipschitz observables still converge", "[egorov]") {
    // square root: Hoelder-1/2 at the origin; atom averages via the exact
    // antiderivative (2/3) x^(3/2), so no declared Lipschitz bound is needed
    const auto map = make_doubling_map();
    double previous = 1e9;
    for (int level = 2; level <= 6; ++level) {
        const auto partition = build_partition(map, level);
        const auto b = transition_matrix(map, partition);
        const auto u = quantize(b, equivalence_classes(b), PhaseScheme::fourier);

        const auto average_sqrt = [&](const Rational& lo, const Rational& hi) {
            const double a = to_double(lo), c = to_double(hi);
            return (2.0 / 3.0) * (std::pow(c, 1.5) - std::pow(a, 1.5)) / (c - a);
        };
        Eigen::VectorXd diag(partition.atom_count());
        Eigen::VectorXd composed(partition.atom_count());
        for (std::int64_t j = 1; j <= partition.atom_count(); ++j) {
            diag(j - 1) = average_sqrt(partition.atom_left(j), partition.atom_right(j));
            const auto& branch =
                map.branches()[static_cast<std::size_t>(map.branch_index_at(partition.atom_left(j)) - 1)];
            const Rational y1 = branch.slope * partition.atom_left(j) + branch.intercept;
            const Rational y2 = branch.slope * partition.atom_right(j) + branch.intercept;
            composed(j - 1) = average_sqrt(std::min(y1, y2), std::max(y1, y2));
        }
        const auto report = egorov_defect(u, Observable::from_diagonal(diag),
                                          Observable::from_diagonal(composed));
        CHECK(report.defect < previous);
        previous = report.defect;
    }
}
