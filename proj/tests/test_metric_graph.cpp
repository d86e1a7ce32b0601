#include "qgraph/metric_graph.hpp"
#include "qgraph/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

using namespace qgraph;

namespace {

Eigen::MatrixXcd alternating_diagonal(int bonds) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(bonds, bonds);
    for (int b = 0; b < bonds; ++b) a(b, b) = (b % 2 == 0) ? 1.0 : -1.0;
    return a;
}

}  // namespace

TEST_CASE("bond swap spectrum matches the closed form", "[metric_graph]") {
    const double l1 = 0.95, l2 = 1.07;
    const auto graph = bond_swap_graph(l1, l2);
    const double period = 2.0 * std::numbers::pi / (l1 + l2);
    const double lambda_max = 20.5 * period;

    const auto spectrum = secular_eigenvalues(graph, lambda_max);
    REQUIRE(spectrum.count() == 20);
    for (std::int64_t n = 1; n <= 20; ++n)
        CHECK(std::abs(spectrum.roots[static_cast<std::size_t>(n - 1)].lambda -
                       static_cast<double>(n) * period) < 1e-8);

    // eigenvectors carry equal weight on both bonds, so A = diag(1,-1)
    // has vanishing matrix elements and both variances are zero
    const Eigen::MatrixXcd a = alternating_diagonal(2);
    const auto with_obs = secular_eigenvalues(graph, lambda_max, &a);
    for (const auto& root : with_obs.roots) {
        CHECK(std::abs(root.matrix_element) < 1e-10);
        CHECK(root.weight > graph.min_length() - 1e-10);
        CHECK(root.weight < graph.max_length() + 1e-10);
    }
    const auto [vs, vs_hat] = variance_VS(graph, a, lambda_max, &with_obs);
    CHECK(vs < 1e-20);
    CHECK(vs_hat < 1e-20);
    CHECK(variance_VU_avg(graph, a, 10.0) < 1e-20);
}

TEST_CASE("an empty window yields an empty spectrum", "[metric_graph]") {
    const auto graph = bond_swap_graph(1.0, 1.3);
    CHECK(secular_eigenvalues(graph, 0.0).count() == 0);
}

TEST_CASE("random graphs satisfy the Weyl count", "[metric_graph]") {
    for (const std::uint64_t seed : {7ULL, 8ULL, 9ULL}) {
        const auto graph = random_metric_graph(4, seed);
        const double lambda_max = 200.0;
        const auto spectrum = secular_eigenvalues(graph, lambda_max);
        INFO("seed " << seed << ", roots " << spectrum.count() << ", mean "
                     << spectrum.mean_count);
        CHECK(std::abs(static_cast<double>(spectrum.count()) - spectrum.mean_count) <= 4.0);
        // roots are sorted, distinct, and inside the window
        for (std::size_t i = 0; i + 1 < spectrum.roots.size(); ++i)
            CHECK(spectrum.roots[i].lambda < spectrum.roots[i + 1].lambda);
        CHECK(spectrum.roots.back().lambda <= lambda_max);
    }
}

TEST_CASE("phase velocity at a root equals the length weight", "[metric_graph]") {
    const auto graph = random_metric_graph(4, 7);
    const auto spectrum = secular_eigenvalues(graph, 30.0);
    REQUIRE(spectrum.count() >= 10);
    const double h = 1e-5;
    for (std::size_t i = 0; i < 10; ++i) {
        const auto& root = spectrum.roots[i];
        const auto arg_at = [&](double lambda) {
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(graph.at(lambda), true);
            int best = 0;
            double best_overlap = -1.0;
            for (int k = 0; k < graph.bonds(); ++k) {
                const double overlap =
                    std::norm(root.vector.dot(solver.eigenvectors().col(k)));
                if (overlap > best_overlap) {
                    best_overlap = overlap;
                    best = k;
                }
            }
            return std::arg(solver.eigenvalues()(best));
        };
        const double derivative = (arg_at(root.lambda + h) - arg_at(root.lambda - h)) / (2 * h);
        CHECK(std::abs(derivative - root.weight) / root.weight < 1e-6);
    }
}

TEST_CASE("variance sandwich and positivity on the random fixture", "[metric_graph]") {
    const auto graph = random_metric_graph(4, 7);
    const Eigen::MatrixXcd a = alternating_diagonal(4);
    const double lambda_max = 200.0 * graph.mean_spacing();
    // the sandwich L_min * V_hat <= V <= L_max * V_hat is asserted inside
    const auto [vs, vs_hat] = variance_VS(graph, a, lambda_max);
    CHECK(vs > 0.0);
    CHECK(vs_hat > 0.0);

    Eigen::MatrixXcd traceful = a;
    traceful(0, 0) = 2.0;
    CHECK_THROWS_AS(variance_VS(graph, traceful, lambda_max), ContractError);
    CHECK_THROWS_AS(variance_VU_avg(graph, traceful, 10.0), ContractError);
}

TEST_CASE("lambda average matches the random-phase ensemble average", "[metric_graph]") {
    const auto graph = random_metric_graph(4, 3);
    const Eigen::MatrixXcd a = alternating_diagonal(4);
    const double lambda_avg =
        variance_VU_avg(graph, a, 300.0 * graph.mean_spacing());

    RandomStream stream(17);
    double ensemble = 0.0;
    const int samples = 2000;
    for (int i = 0; i < samples; ++i) {
        Eigen::VectorXcd phases(graph.bonds());
        for (int b = 0; b < graph.bonds(); ++b) phases(b) = std::polar(1.0, stream.phase());
        const Eigen::MatrixXcd ds0 = phases.asDiagonal() * graph.s0();
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(ds0, true);
        double vu = 0.0;
        for (int k = 0; k < graph.bonds(); ++k) {
            const Eigen::VectorXcd v = solver.eigenvectors().col(k).normalized();
            const double element = std::real(v.dot(a * v));
            vu += element * element;
        }
        ensemble += vu / graph.bonds();
    }
    ensemble /= samples;
    CHECK(std::abs(lambda_avg - ensemble) / ensemble < 0.1);
}

TEST_CASE("variance relation residual shrinks with the window", "[metric_graph]") {
    const auto graph = random_metric_graph(4, 7);
    const Eigen::MatrixXcd a = alternating_diagonal(4);
    const double spacing = graph.mean_spacing();
    const auto report = check_variance_relation(graph, a, {50.0 * spacing, 200.0 * spacing});
    REQUIRE(report.trend.size() == 2);
    CHECK(report.trend[1].residual < 0.35);
    CHECK(report.matching_normalization == "mean_length");
    // the alternative normalization (Tr L instead of mean length) is far off
    CHECK(report.trend[1].residual_alt > report.trend[1].residual);
}
