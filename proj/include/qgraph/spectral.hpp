#pragma once

#include "qgraph/classical.hpp"
#include "qgraph/errors.hpp"
#include "qgraph/observable.hpp"
#include "qgraph/quantizer.hpp"
#include "qgraph/stochastic_matrix.hpp"
#include "qgraph/tolerances.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

namespace qgraph {

/// Orthonormal eigenbasis of a unitary propagator with the residuals that
/// were measured when it was produced.
struct SpectralData {
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd eigenvectors;  // column j pairs with eigenvalues(j)
    double max_residual = 0.0;           // max_j ||U psi_j - lambda_j psi_j||
    double orthonormality_defect = 0.0;  // ||Psi^dag Psi - I||_max
};

/// Full diagonalization through a unitary Schur triangularization: U is
/// normal, so the triangular factor is diagonal up to roundoff and the
/// orthonormal factor's columns form the eigenbasis — orthonormal even
/// across degenerate eigenvalues, where vector-at-a-time solvers are not.
inline SpectralData eigenbasis(const UnitaryPropagator& u, const Tolerances& tol = {}) {
    const std::int64_t m = u.size();
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(u.matrix());
    if (schur.info() != Eigen::Success)
        throw NumericalError("Schur decomposition failed to converge", 1.0);

    SpectralData data;
    data.eigenvalues = schur.matrixT().diagonal();
    data.eigenvectors = schur.matrixU();

    const Eigen::MatrixXcd residual_matrix =
        u.matrix() * data.eigenvectors - data.eigenvectors * data.eigenvalues.asDiagonal();
    for (std::int64_t j = 0; j < m; ++j)
        data.max_residual = std::max(data.max_residual, residual_matrix.col(j).norm());
    data.orthonormality_defect =
        (data.eigenvectors.adjoint() * data.eigenvectors - Eigen::MatrixXcd::Identity(m, m))
            .cwiseAbs()
            .maxCoeff();

    if (data.max_residual > tol.spectral_residual)
        throw NumericalError("eigenpair residual above tolerance", data.max_residual);
    if (data.orthonormality_defect > tol.orthonormality)
        throw NumericalError("eigenbasis lost orthonormality", data.orthonormality_defect);
    for (std::int64_t j = 0; j < m; ++j) {
        const double off_circle = std::abs(std::abs(data.eigenvalues(j)) - 1.0);
        if (off_circle > tol.spectral_residual)
            throw NumericalError("eigenvalue off the unit circle", off_circle);
    }
    return data;
}

/// Mean and variance of the eigenvector matrix elements <psi_j, O psi_j>.
/// The mean equals M^-1 Tr O identically (unitarity); that identity is
/// enforced here as a numerical cross-check.
inline std::pair<double, double> quantum_moments(const SpectralData& spectral,
                                                 const Observable& o,
                                                 const Tolerances& tol = {}) {
    const std::int64_t m = spectral.eigenvectors.rows();
    if (o.size() != m) throw ContractError("quantum_moments: dimension mismatch");

    double mean = 0.0;
    std::vector<double> elements(static_cast<std::size_t>(m));
    for (std::int64_t j = 0; j < m; ++j) {
        double e = 0.0;
        for (std::int64_t r = 0; r < m; ++r)
            e += o.diagonal()(r) * std::norm(spectral.eigenvectors(r, j));
        elements[static_cast<std::size_t>(j)] = e;
        mean += e;
    }
    mean /= static_cast<double>(m);

    const double trace_mean = o.mean();
    if (std::abs(mean - trace_mean) > tol.mean_identity)
        throw NumericalError("quantum mean deviates from M^-1 Tr O",
                             std::abs(mean - trace_mean));

    double variance = 0.0;
    for (const double e : elements) variance += (e - trace_mean) * (e - trace_mean);
    variance /= static_cast<double>(m);
    return {mean, variance};
}

/// K(n,T) = M^-1 Tr(O_T^* O_T) with O_T the T-step time average of O under
/// conjugation by U, built by iterated matrix products.
inline double majorant_K(const UnitaryPropagator& u, const Observable& o, int horizon) {
    if (horizon < 1) throw DomainError("majorant_K: T must be >= 1");
    if (o.size() != u.size()) throw ContractError("majorant_K: dimension mismatch");
    Eigen::MatrixXcd step = o.diagonal().cast<std::complex<double>>().asDiagonal();
    Eigen::MatrixXcd acc = step;
    for (int t = 1; t < horizon; ++t) {
        step = u.matrix().adjoint() * step * u.matrix();
        acc += step;
    }
    acc /= static_cast<double>(horizon);
    return acc.squaredNorm() / static_cast<double>(u.size());
}

/// The diagonal part of the trajectory expansion of K(n,T): the sum over
/// single trajectories of |Phi_tau|^2 |A_tau|^2 / M, with |A_tau|^2 the
/// exact product of transition probabilities.  Expects a centered
/// observable (the expansion assumes E(phi) = 0).
inline double diagonal_K(const StochasticMatrix& b, const Observable& o, int horizon,
                         const PathBudget& budget = {}) {
    if (horizon < 1) throw DomainError("diagonal_K: T must be >= 1");
    if (o.size() != b.size()) throw ContractError("diagonal_K: dimension mismatch");
    const double inv_m = 1.0 / static_cast<double>(b.size());
    double acc = 0.0;
    std::int64_t used = 0;
    for (std::int64_t start = 1; start <= b.size(); ++start) {
        for_each_path(b, start, horizon, budget, used,
                      [&](std::span<const std::int64_t> path, const Rational& product) {
                          double phi = 0.0;
                          for (int t = 1; t <= horizon; ++t)
                              phi += o.entry(path[static_cast<std::size_t>(t)]);
                          phi /= horizon;
                          acc += phi * phi * to_double(product) * inv_m;
                      });
    }
    return acc;
}

inline double diagonal_K(const PiecewiseLinearMap& map, const Partition& partition,
                         const Observable& o, int horizon, const PathBudget& budget = {}) {
    return diagonal_K(transition_matrix(map, partition), o, horizon, budget);
}

/// One term of the trajectory expansion of (S_T)_{s,f}.
struct TrajectoryTerm {
    std::vector<std::int64_t> path;      // s = b_0, ..., b_T = f
    std::complex<double> amplitude;      // product of U entries along the path
    double trajectory_average = 0.0;     // Phi_tau
};

/// All geometry-compatible trajectories s -> f of length T with their
/// amplitudes and observable averages; `total` is sum of Phi_tau * A_tau and
/// reproduces the (s,f) entry of U^T O_T.
struct TrajectorySum {
    std::int64_t source = 0;
    std::int64_t sink = 0;
    int horizon = 0;
    std::vector<TrajectoryTerm> terms;
    std::complex<double> total{0.0, 0.0};
};

inline TrajectorySum trajectory_sum(const UnitaryPropagator& u, const Observable& o,
                                    std::int64_t source, std::int64_t sink, int horizon,
                                    const PathBudget& budget = {}) {
    const std::int64_t m = u.size();
    if (source < 1 || source > m || sink < 1 || sink > m)
        throw DomainError("trajectory_sum: atom index out of range");
    if (horizon < 1) throw DomainError("trajectory_sum: T must be >= 1");
    if (o.size() != m) throw ContractError("trajectory_sum: dimension mismatch");

    std::vector<std::vector<std::int64_t>> support(static_cast<std::size_t>(m));
    for (std::int64_t j = 1; j <= m; ++j) support[static_cast<std::size_t>(j - 1)] = u.row_support(j);

    TrajectorySum result;
    result.source = source;
    result.sink = sink;
    result.horizon = horizon;

    std::vector<std::int64_t> path(static_cast<std::size_t>(horizon) + 1);
    std::vector<std::complex<double>> prefix(static_cast<std::size_t>(horizon) + 1);
    path[0] = source;
    prefix[0] = {1.0, 0.0};
    std::int64_t visited = 0;

    const std::function<void(int)> recurse = [&](int depth) {
        if (depth == horizon) {
            if (++visited > budget.max_paths)
                throw ResourceError("trajectory enumeration exceeded the path budget");
            if (path[static_cast<std::size_t>(horizon)] != sink) return;
            TrajectoryTerm term;
            term.path = path;
            term.amplitude = prefix[static_cast<std::size_t>(horizon)];
            double phi = 0.0;
            for (int t = 1; t <= horizon; ++t) phi += o.entry(path[static_cast<std::size_t>(t)]);
            term.trajectory_average = phi / horizon;
            result.total += term.trajectory_average * term.amplitude;
            result.terms.push_back(std::move(term));
            return;
        }
        const auto d = static_cast<std::size_t>(depth);
        for (const std::int64_t next : support[static_cast<std::size_t>(path[d] - 1)]) {
            path[d + 1] = next;
            prefix[d + 1] = prefix[d] * u.matrix()(path[d] - 1, next - 1);
            recurse(depth + 1);
        }
    };
    recurse(0);
    return result;
}

/// Per-level record of the quantum-ergodicity sweep.
struct VarianceCurvePoint {
    int horizon = 0;
    double majorant = 0.0;        // K(n,T)
    double diagonal = 0.0;        // K^diag(n,T)
    double classical = 0.0;       // V_T(phi_hat)
};

struct VarianceReport {
    int level = 0;
    std::int64_t atom_count = 0;
    double quantum_mean = 0.0;
    double variance = 0.0;        // V_n
    int headline_horizon = 0;     // the T picked by the time rule
    double headline_majorant = 0.0;
    std::vector<VarianceCurvePoint> curve;
};

/// T = T(n) selection: tie the horizon to the refinement level (the choice
/// that keeps the diagonal term exact) or fix it.
struct TimeRule {
    bool use_level = true;
    int fixed = 1;

    int horizon(int level) const { return use_level ? std::max(1, level) : fixed; }
    static TimeRule level_rule() { return {true, 1}; }
    static TimeRule fixed_rule(int t) { return {false, t}; }
};

/// Runs levels lo..hi of the full pipeline for one map and observable:
/// partition, exact B, Fourier quantization, eigenbasis, variance, and the
/// majorant/diagonal/classical curves.  Enforces the majorant inequality,
/// the exactness window T <= n, and the diagonal-term identity at every
/// tabulated horizon.
inline std::vector<VarianceReport> qe_sweep(const PiecewiseLinearMap& map,
                                            const ObservableSpec& spec, int level_lo,
                                            int level_hi, const TimeRule& rule = {},
                                            const Tolerances& tol = {},
                                            const PathBudget& budget = {}) {
    if (level_lo < 0 || level_hi < level_lo) throw DomainError("qe_sweep: bad level range");
    std::vector<VarianceReport> reports;
    for (int level = level_lo; level <= level_hi; ++level) {
        const Partition partition = build_partition(map, level);
        if (partition.atom_count() > 4096)
            throw ResourceError("sweep level " + std::to_string(level) +
                                " exceeds the dense-matrix cap of 4096 atoms");
        const StochasticMatrix b = transition_matrix(map, partition);
        const EquivalenceClasses classes = equivalence_classes(b);
        const UnitaryPropagator u = quantize(b, classes, PhaseScheme::fourier, nullptr, tol);
        const Observable o_raw = quantize_observable(spec, partition, tol);
        const Observable o = o_raw.centered();

        const SpectralData spectral = eigenbasis(u, tol);
        // the mean identity is checked on the raw observable; the variance
        // comes from the centered one (stable when E(phi) dominates)
        const double mean = quantum_moments(spectral, o_raw, tol).first;
        const double variance = quantum_moments(spectral, o, tol).second;

        VarianceReport report;
        report.level = level;
        report.atom_count = partition.atom_count();
        report.quantum_mean = mean;
        report.variance = variance;
        report.headline_horizon = rule.horizon(level);

        std::vector<int> horizons;
        for (int t = 1; t <= std::min(level + 2, 8); ++t) horizons.push_back(t);
        if (std::find(horizons.begin(), horizons.end(), report.headline_horizon) ==
            horizons.end())
            horizons.push_back(report.headline_horizon);
        std::sort(horizons.begin(), horizons.end());

        const double identity_tol = tol.exact_identity(partition.atom_count());
        for (const int t : horizons) {
            VarianceCurvePoint point;
            point.horizon = t;
            point.majorant = majorant_K(u, o, t);
            point.diagonal = diagonal_K(b, o, t, budget);
            point.classical = classical_time_variance(b, o, t, budget);
            if (variance > point.majorant + identity_tol)
                throw NumericalError("majorant inequality violated at T=" + std::to_string(t),
                                     variance - point.majorant);
            if (t <= level && std::abs(point.majorant - point.diagonal) > identity_tol)
                throw NumericalError("diagonal exactness violated inside the window at T=" +
                                         std::to_string(t),
                                     std::abs(point.majorant - point.diagonal));
            if (std::abs(point.diagonal - point.classical) > identity_tol)
                throw NumericalError("diagonal term does not match the classical variance at T=" +
                                         std::to_string(t),
                                     std::abs(point.diagonal - point.classical));
            if (t == report.headline_horizon) report.headline_majorant = point.majorant;
            report.curve.push_back(point);
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace qgraph
