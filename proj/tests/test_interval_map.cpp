#include "qgraph/fixtures.hpp"
#include "qgraph/interval_map.hpp"
#include "qgraph/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace qgraph;

TEST_CASE("evaluate applies the exact affine branch", "[interval_map]") {
    const auto tent = make_tent_map();
    CHECK(tent.evaluate(Rational(3, 10)) == Rational(3, 5));

    const auto doubling = make_doubling_map();
    CHECK(doubling.evaluate(Rational(3, 4)) == Rational(1, 2));
    CHECK(doubling.evaluate(Rational(0)) == Rational(0));

    // interior breakpoints go to the right branch; x = 1 uses the last one
    CHECK(doubling.evaluate(Rational(1, 2)) == Rational(0));
    CHECK(doubling.evaluate(Rational(1)) == Rational(1));
    CHECK(tent.evaluate(Rational(1, 2)) == Rational(1));

    CHECK_THROWS_AS(doubling.evaluate(Rational(3, 2)), DomainError);
    CHECK_THROWS_AS(doubling.evaluate(Rational(-1, 10)), DomainError);
}

TEST_CASE("evaluate result stays on the expected denominator grid", "[interval_map]") {
    const auto tripling = make_tripling_map();
    RandomStream stream(11);
    for (int i = 0; i < 200; ++i) {
        const auto p = static_cast<std::int64_t>(stream.uniform01() * 1000);
        const std::int64_t q = 1 + static_cast<std::int64_t>(stream.uniform01() * 999);
        if (p > q) continue;
        const Rational x(p, q);
        const Rational y = tripling.evaluate(x);
        // y = s*x + c with integer s and c on the 1/M0 grid:
        // denominator divides q*M0
        CHECK(Integer(q) * tripling.primary_atom_count() % denominator(y) == 0);
    }
}

TEST_CASE("validate_map passes the standard fixtures", "[interval_map]") {
    for (const auto* name : {"doubling", "tent", "tripling"}) {
        const auto map = make_builtin_map(name);
        const auto report = validate_map(map);
        INFO(name);
        CHECK(report.measure_preserving);
        CHECK(report.endpoints_forward_invariant);
        CHECK(report.ok());
    }
    CHECK(validate_map(make_doubling_map()).lcm_slope == 2);
    CHECK(validate_map(make_tent_map()).lcm_slope == 2);
    CHECK(validate_map(make_tent_map()).slopes == std::vector<std::int64_t>{2, -2});
    CHECK(validate_map(make_tripling_map()).lcm_slope == 3);
}

TEST_CASE("validate_map reports non-preserving maps without throwing", "[interval_map]") {
    // two unit-slope branches whose images pile up on the left half
    const PiecewiseLinearMap squash(2, {{1, Rational(0)}, {1, Rational(-1, 2)}});
    const auto report = validate_map(squash);
    CHECK_FALSE(report.measure_preserving);
    CHECK_FALSE(report.ok());
    CHECK_FALSE(report.failures.empty());
    // its endpoints still land on the primary grid
    CHECK(report.endpoints_forward_invariant);
}

TEST_CASE("validate_map flags drifting endpoints", "[interval_map]") {
    // translation by an off-grid amount: 0 maps to 1/4, not a primary endpoint
    const PiecewiseLinearMap shift(2, {{1, Rational(1, 4)}, {1, Rational(-1, 2)}});
    const auto report = validate_map(shift);
    CHECK_FALSE(report.endpoints_forward_invariant);
    CHECK_FALSE(report.ok());
}

TEST_CASE("construction rejects structurally bad maps", "[interval_map]") {
    CHECK_THROWS_AS(PiecewiseLinearMap(1, {{2, Rational(0)}}), DomainError);   // image escapes
    CHECK_THROWS_AS(PiecewiseLinearMap(2, {{0, Rational(0)}, {2, Rational(-1)}}), DomainError);
    CHECK_THROWS_AS(PiecewiseLinearMap(2, {{2, Rational(0)}}), DomainError);   // missing branch
}

TEST_CASE("branch-level preimage measures sum to one on validated maps", "[interval_map]") {
    RandomStream stream(23);
    for (const auto* name : {"doubling", "tent", "tripling"}) {
        const auto map = make_builtin_map(name);
        for (int i = 0; i < 50; ++i) {
            const std::int64_t q = 101 + static_cast<std::int64_t>(stream.uniform01() * 400);
            const std::int64_t p = 1 + static_cast<std::int64_t>(stream.uniform01() * (q - 2));
            const Rational y(p, q);  // a prime-ish denominator keeps y off every image grid
            Rational total = 0;
            for (const auto& branch : map.branches())
                if (y > branch.image_low() && y < branch.image_high())
                    total += Rational(1, branch.slope < 0 ? -branch.slope : branch.slope);
            INFO(name << " at y = " << format_rational(y));
            CHECK(total == 1);
        }
    }
}

TEST_CASE("map JSON round-trips", "[interval_map]") {
    const auto tent = make_tent_map();
    const auto copy = PiecewiseLinearMap::from_json(tent.to_json());
    REQUIRE(copy.branches().size() == tent.branches().size());
    for (std::size_t i = 0; i < copy.branches().size(); ++i) {
        CHECK(copy.branches()[i].slope == tent.branches()[i].slope);
        CHECK(copy.branches()[i].intercept == tent.branches()[i].intercept);
    }
    CHECK(parse_rational("-3/4") == Rational(-3, 4));
    CHECK(parse_rational("5") == Rational(5));
    CHECK(format_rational(Rational(-3, 4)) == "-3/4");
    CHECK_THROWS_AS(parse_rational("1/0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_rational("x"), std::invalid_argument);
}
