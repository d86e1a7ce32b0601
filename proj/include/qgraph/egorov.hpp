#pragma once

#include "qgraph/errors.hpp"
#include "qgraph/observable.hpp"
#include "qgraph/quantizer.hpp"
#include "qgraph/spectral.hpp"
#include "qgraph/tolerances.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace qgraph {

/// Conjugation defect || U O(phi) U^-1 - O(phi.S) || for one level.
struct EgorovReport {
    int level = 0;
    std::int64_t atom_count = 0;
    double defect = 0.0;      // largest singular value of the difference
    double block_max = 0.0;   // max over class blocks of dim * max|entry|
    std::optional<double> lipschitz_bound;
};

namespace detail {

/// Operator norm of the Hermitian difference matrix: dense spectral radius
/// up to 2048, per-class blocks beyond (the difference is block-diagonal
/// over the equivalence classes, so the block route is lossless).
inline double hermitian_operator_norm(const Eigen::MatrixXcd& d, const EquivalenceClasses& classes) {
    constexpr std::int64_t dense_limit = 2048;
    if (d.rows() <= dense_limit) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(d, Eigen::EigenvaluesOnly);
        return solver.eigenvalues().cwiseAbs().maxCoeff();
    }
    double worst = 0.0;
    for (const auto& members : classes.classes) {
        const auto s = static_cast<std::int64_t>(members.size());
        Eigen::MatrixXcd block(s, s);
        for (std::int64_t a = 0; a < s; ++a)
            for (std::int64_t c = 0; c < s; ++c)
                block(a, c) = d(members[static_cast<std::size_t>(a)] - 1,
                                members[static_cast<std::size_t>(c)] - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(block, Eigen::EigenvaluesOnly);
        worst = std::max(worst, solver.eigenvalues().cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace detail

/// Q = U O(phi) U^dag compared against the direct quantization of phi(S(x)).
/// Verifies the two structural facts from which the O(1/M) bound follows:
/// the diagonal of Q equals O(phi.S) exactly, and the difference vanishes
/// outside the equivalence-class blocks.
inline EgorovReport egorov_defect(const UnitaryPropagator& u, const Observable& o_phi,
                                  const Observable& o_phi_s, const Tolerances& tol = {}) {
    const std::int64_t m = u.size();
    if (o_phi.size() != m || o_phi_s.size() != m)
        throw ContractError("egorov_defect: dimension mismatch");

    const Eigen::MatrixXcd q = u.matrix() *
                               o_phi.diagonal().cast<std::complex<double>>().asDiagonal() *
                               u.matrix().adjoint();
    Eigen::MatrixXcd diff = q;
    diff.diagonal() -= o_phi_s.diagonal().cast<std::complex<double>>();

    double diag_residual = 0.0;
    for (std::int64_t j = 0; j < m; ++j)
        diag_residual = std::max(diag_residual, std::abs(diff(j, j)));
    if (diag_residual > tol.diag_match)
        throw NumericalError("diagonal of U O U^-1 deviates from O(phi.S)", diag_residual);

    const EquivalenceClasses& classes = u.classes();
    double off_block = 0.0;
    double block_max = 0.0;
    for (std::int64_t j = 1; j <= m; ++j)
        for (std::int64_t k = 1; k <= m; ++k) {
            const double a = std::abs(diff(j - 1, k - 1));
            if (classes.class_id(j) == classes.class_id(k)) {
                const double dim =
                    static_cast<double>(classes.classes[classes.class_id(j)].size());
                block_max = std::max(block_max, dim * a);
            } else {
                off_block = std::max(off_block, a);
            }
        }
    if (off_block > tol.off_block)
        throw NumericalError("Egorov difference has mass outside the class blocks", off_block);

    EgorovReport report;
    report.atom_count = m;
    report.defect = detail::hermitian_operator_norm(diff, classes);
    report.block_max = block_max;
    report.lipschitz_bound = o_phi.lipschitz_bound();
    return report;
}

/// Multi-level defect computation with a log-log least-squares fit of
/// defect against M_n.  Lipschitz observables decay like 1/M_n.
struct EgorovScaling {
    std::vector<EgorovReport> levels;
    std::optional<double> fitted_exponent;
    std::optional<double> implied_constant;  // fitted D in defect <= D*Lip/M
    bool degenerate_zero = false;            // all defects vanished; nothing to fit
};

inline EgorovScaling egorov_scaling(const PiecewiseLinearMap& map, const ObservableSpec& spec,
                                    int level_lo, int level_hi, const Tolerances& tol = {}) {
    if (level_hi - level_lo + 1 < 3)
        throw ContractError("egorov_scaling needs at least 3 levels");
    if (!spec.lipschitz_bound())
        throw ContractError("egorov_scaling needs an observable with a Lipschitz bound");

    EgorovScaling scaling;
    for (int level = level_lo; level <= level_hi; ++level) {
        const Partition partition = build_partition(map, level);
        if (partition.atom_count() > 4096)
            throw ResourceError("egorov level " + std::to_string(level) +
                                " exceeds the dense-matrix cap of 4096 atoms");
        const StochasticMatrix b = transition_matrix(map, partition);
        const UnitaryPropagator u =
            quantize(b, equivalence_classes(b), PhaseScheme::fourier, nullptr, tol);
        const Observable o_phi = quantize_observable(spec, partition, tol);
        const Observable o_phi_s = quantize_composed(spec, map, partition, tol);
        EgorovReport report = egorov_defect(u, o_phi, o_phi_s, tol);
        report.level = level;
        scaling.levels.push_back(std::move(report));
    }

    std::vector<double> xs, ys;
    for (const auto& r : scaling.levels)
        if (r.defect > 1e-14) {
            xs.push_back(std::log(static_cast<double>(r.atom_count)));
            ys.push_back(std::log(r.defect));
        }
    if (xs.size() < 3) {
        scaling.degenerate_zero = true;
        return scaling;
    }

    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    scaling.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    const double lip = *spec.lipschitz_bound();
    if (lip > 0.0) {
        double constant = 0.0;
        for (const auto& r : scaling.levels)
            constant = std::max(constant,
                                r.defect * static_cast<double>(r.atom_count) / lip);
        scaling.implied_constant = constant;
    }
    return scaling;
}

}  // namespace qgraph
