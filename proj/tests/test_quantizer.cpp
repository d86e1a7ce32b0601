#include "qgraph/fixtures.hpp"
#include "qgraph/quantizer.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

using namespace qgraph;
using Catch::Matchers::WithinAbs;

namespace {

UnitaryPropagator fourier_propagator(const PiecewiseLinearMap& map, int level) {
    const auto b = transition_matrix(map, build_partition(map, level));
    return quantize(b, equivalence_classes(b), PhaseScheme::fourier);
}

const PiecewiseLinearMap kMixed(8, {{4, Rational(0)},
                                    {4, Rational(0)},
                                    {2, Rational(-1, 2)},
                                    {2, Rational(-1, 2)},
                                    {2, Rational(-1, 2)},
                                    {2, Rational(-1, 2)},
                                    {4, Rational(-3)},
                                    {4, Rational(-3)}});

}  // namespace

TEST_CASE("doubling map quantizes into 2x2 Fourier blocks", "[quantizer]") {
    const auto u = fourier_propagator(make_doubling_map(), 1);
    REQUIRE(u.size() == 4);
    const double r = 1.0 / std::sqrt(2.0);
    // class {1,3} on columns {1,2}: [[1,1],[1,-1]]/sqrt(2)
    CHECK_THAT(u.matrix()(0, 0).real(), WithinAbs(r, 1e-15));
    CHECK_THAT(u.matrix()(0, 1).real(), WithinAbs(r, 1e-15));
    CHECK_THAT(u.matrix()(2, 0).real(), WithinAbs(r, 1e-15));
    CHECK_THAT(u.matrix()(2, 1).real(), WithinAbs(-r, 1e-15));
    CHECK_THAT(std::abs(u.matrix()(0, 2)), WithinAbs(0.0, 0.0));
    CHECK(u.unitarity_residual() < 1e-14);
    CHECK(u.moduli_residual() < 1e-14);
}

TEST_CASE("tripling map gets 3x3 Fourier blocks with tiny residuals", "[quantizer]") {
    const auto u = fourier_propagator(make_tripling_map(), 1);
    REQUIRE(u.size() == 9);
    CHECK(u.unitarity_residual() < 1e-14);
    CHECK(u.moduli_residual() < 1e-14);
    for (const auto& members : u.classes().classes) CHECK(members.size() == 3);
}

TEST_CASE("quantization contract holds across fixtures and levels", "[quantizer]") {
    for (const auto* name : {"doubling", "tent", "tripling"}) {
        const auto map = make_builtin_map(name);
        for (int level = 0; level <= 4; ++level) {
            const auto b = transition_matrix(map, build_partition(map, level));
            const auto u = quantize(b, equivalence_classes(b), PhaseScheme::fourier);
            INFO(name << " level " << level);
            CHECK(u.unitarity_residual() <= 1e-10);
            CHECK(moduli_residual(u.matrix(), b) <= 1e-12);
        }
    }
}

TEST_CASE("a slope-one branch becomes a scalar block", "[quantizer]") {
    // identity map: every atom is its own class; every block is [1]
    const PiecewiseLinearMap identity(2, {{1, Rational(0)}, {1, Rational(0)}});
    const auto b = transition_matrix(identity, build_partition(identity, 0));
    const auto u = quantize(b, equivalence_classes(b), PhaseScheme::fourier);
    CHECK(u.matrix()(0, 0) == std::complex<double>(1.0, 0.0));
    CHECK(u.matrix()(1, 1) == std::complex<double>(1.0, 0.0));
    CHECK(u.unitarity_residual() == 0.0);
}

TEST_CASE("fourier scheme refuses non-uniform blocks", "[quantizer]") {
    const auto b = transition_matrix(kMixed, build_partition(kMixed, 0));
    CHECK_THROWS_AS(quantize(b, equivalence_classes(b), PhaseScheme::fourier),
                    UnistochasticError);
}

TEST_CASE("user-supplied blocks quantize the mixed-slope map", "[quantizer]") {
    const auto b = transition_matrix(kMixed, build_partition(kMixed, 0));
    const auto classes = equivalence_classes(b);
    REQUIRE(classes.classes.size() == 2);

    const double h = 1.0 / std::sqrt(2.0);
    Eigen::MatrixXcd block(4, 4);
    block << 0.5, 0.5, 0.5, 0.5,   //
        h, -h, 0, 0,               //
        0, 0, h, -h,               //
        0.5, 0.5, -0.5, -0.5;
    const std::vector<Eigen::MatrixXcd> blocks{block, block};

    const auto u = quantize(b, classes, PhaseScheme::user_supplied, &blocks);
    CHECK(u.unitarity_residual() <= 1e-10);
    CHECK(u.moduli_residual() <= 1e-12);
    CHECK(u.scheme() == PhaseScheme::user_supplied);

    // wrong moduli are rejected
    Eigen::MatrixXcd bad = block;
    bad(1, 2) = h;
    const std::vector<Eigen::MatrixXcd> bad_blocks{bad, block};
    CHECK_THROWS_AS(quantize(b, classes, PhaseScheme::user_supplied, &bad_blocks),
                    UnistochasticError);
    CHECK_THROWS_AS(quantize(b, classes, PhaseScheme::user_supplied, nullptr), ContractError);
}

TEST_CASE("random phases preserve moduli and reproduce bit for bit", "[quantizer]") {
    const auto u = fourier_propagator(make_tent_map(), 3);

    const auto ensemble = random_phase_ensemble(u, 42, 3);
    REQUIRE(ensemble.size() == 3);
    for (const auto& member : ensemble) {
        CHECK(member.unitarity_residual() <= 1e-10);
        for (std::int64_t j = 0; j < u.size(); ++j)
            for (std::int64_t k = 0; k < u.size(); ++k)
                CHECK(std::abs(std::norm(member.matrix()(j, k)) -
                               std::norm(u.matrix()(j, k))) < 1e-14);
    }

    const auto replay = random_phase_ensemble(u, 42, 3);
    for (std::size_t m = 0; m < ensemble.size(); ++m)
        CHECK(ensemble[m].matrix() == replay[m].matrix());

    const auto other_seed = random_phase_ensemble(u, 43, 1);
    CHECK(other_seed[0].matrix() != ensemble[0].matrix());

    // degenerate hook: zero phases return U itself
    const auto identity_phases = random_phase_ensemble(u, 42, 1, true);
    CHECK(identity_phases[0].matrix() == u.matrix());
}
