#pragma once

#include "qgraph/errors.hpp"
#include "qgraph/rng.hpp"
#include "qgraph/tolerances.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

namespace qgraph {

/// Metric graph in scattering form: a fixed unitary S0 on B directed bonds
/// and positive bond lengths, giving the one-parameter family
/// S(lambda) = exp(i*lambda*L) * S0.
class MetricGraph {
  public:
    MetricGraph(Eigen::MatrixXcd s0, Eigen::VectorXd lengths, const Tolerances& tol = {})
        : s0_(std::move(s0)), lengths_(std::move(lengths)) {
        if (s0_.rows() != s0_.cols() || s0_.rows() != lengths_.size())
            throw ContractError("metric graph: S0 must be square with one length per bond");
        for (std::int64_t b = 0; b < lengths_.size(); ++b)
            if (!(lengths_(b) > 0.0)) throw DomainError("bond lengths must be positive");
        const std::int64_t n = s0_.rows();
        const double defect =
            (s0_.adjoint() * s0_ - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
        if (defect > tol.unitarity)
            throw NumericalError("S0 is not unitary to tolerance", defect);
    }

    int bonds() const { return static_cast<int>(s0_.rows()); }
    const Eigen::MatrixXcd& s0() const { return s0_; }
    const Eigen::VectorXd& lengths() const { return lengths_; }
    double total_length() const { return lengths_.sum(); }
    double mean_length() const { return lengths_.mean(); }
    double min_length() const { return lengths_.minCoeff(); }
    double max_length() const { return lengths_.maxCoeff(); }

    /// Mean number of eigenvalues in [0, Lambda] (Weyl estimate).
    double mean_count(double lambda_max) const {
        return lambda_max * total_length() / (2.0 * std::numbers::pi);
    }

    /// Mean spacing between consecutive eigenvalues.
    double mean_spacing() const { return 2.0 * std::numbers::pi / total_length(); }

    Eigen::MatrixXcd at(double lambda) const {
        Eigen::VectorXcd d(lengths_.size());
        for (std::int64_t b = 0; b < lengths_.size(); ++b)
            d(b) = std::polar(1.0, lambda * lengths_(b));
        return d.asDiagonal() * s0_;
    }

  private:
    Eigen::MatrixXcd s0_;
    Eigen::VectorXd lengths_;
};

/// Two bonds exchanged by the vertex: S0 = [[0,1],[1,0]].  The secular
/// spectrum is lambda_n = 2*pi*n/(L1+L2) in closed form.
inline MetricGraph bond_swap_graph(double l1, double l2) {
    Eigen::MatrixXcd s0(2, 2);
    s0 << 0, 1, 1, 0;
    Eigen::VectorXd lengths(2);
    lengths << l1, l2;
    return MetricGraph(std::move(s0), std::move(lengths));
}

/// Haar-distributed S0 (QR of a seeded complex Gaussian matrix with the
/// standard phase fix) and lengths 1 + u, u uniform on [-0.1, 0.1]: close
/// to unit and rationally independent with probability one.
inline MetricGraph random_metric_graph(int bonds, std::uint64_t seed) {
    if (bonds < 1) throw DomainError("graph needs at least one bond");
    RandomStream stream(seed);
    Eigen::VectorXd lengths(bonds);
    for (int b = 0; b < bonds; ++b) lengths(b) = 1.0 + 0.1 * (2.0 * stream.uniform01() - 1.0);

    Eigen::MatrixXcd g(bonds, bonds);
    for (int r = 0; r < bonds; ++r)
        for (int c = 0; c < bonds; ++c) g(r, c) = stream.gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ();
    const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < bonds; ++c) {
        const std::complex<double> d = r(c, c);
        q.col(c) *= (std::abs(d) > 0 ? d / std::abs(d) : 1.0);
    }
    return MetricGraph(std::move(q), std::move(lengths));
}

/// One secular root: S(lambda_n) has eigenvalue 1 with eigenvector `vector`;
/// `weight` is the phase velocity <phi, L phi> at the root.
struct MetricRoot {
    double lambda = 0.0;
    int branch = 0;  // 1-based eigenphase branch that crossed
    double weight = 0.0;
    double matrix_element = 0.0;  // <phi, A phi>, 0 when no observable given
    Eigen::VectorXcd vector;
};

struct MetricSpectrum {
    std::vector<MetricRoot> roots;
    double lambda_max = 0.0;
    double mean_count = 0.0;

    std::int64_t count() const { return static_cast<std::int64_t>(roots.size()); }
};

namespace detail {

struct EigenSystem {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd vectors;
};

inline EigenSystem solve_eigen(const Eigen::MatrixXcd& s) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(s, true);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigen decomposition of S(lambda) failed", 1.0);
    EigenSystem sys{solver.eigenvalues(), solver.eigenvectors()};
    for (std::int64_t k = 0; k < sys.vectors.cols(); ++k) sys.vectors.col(k).normalize();
    return sys;
}

/// Greedy assignment of new eigenpairs to old ones by |overlap|; returns
/// the permutation new_of_old, or nullopt when the weakest match falls
/// under the confidence floor.
inline std::optional<std::vector<int>> match_by_overlap(const Eigen::MatrixXcd& old_vectors,
                                                        const Eigen::MatrixXcd& new_vectors,
                                                        double min_overlap_sq = 0.55) {
    const int n = static_cast<int>(old_vectors.cols());
    const Eigen::MatrixXd overlap_sq =
        (old_vectors.adjoint() * new_vectors).cwiseAbs2();
    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (int pick = 0; pick < n; ++pick) {
        int best_old = -1, best_new = -1;
        double best = -1.0;
        for (int i = 0; i < n; ++i) {
            if (assignment[static_cast<std::size_t>(i)] >= 0) continue;
            for (int j = 0; j < n; ++j) {
                if (taken[static_cast<std::size_t>(j)]) continue;
                if (overlap_sq(i, j) > best) {
                    best = overlap_sq(i, j);
                    best_old = i;
                    best_new = j;
                }
            }
        }
        if (best < min_overlap_sq) return std::nullopt;
        assignment[static_cast<std::size_t>(best_old)] = best_new;
        taken[static_cast<std::size_t>(best_new)] = true;
    }
    return assignment;
}

inline double principal_arg(const std::complex<double>& z) { return std::arg(z); }

/// Phase advance from old to new eigenvalue, reduced to [0, 2*pi): valid
/// because every eigenphase moves forward (theta' = <psi, L psi> > 0).
inline double phase_advance(const std::complex<double>& before,
                            const std::complex<double>& after) {
    double d = principal_arg(after) - principal_arg(before);
    const double two_pi = 2.0 * std::numbers::pi;
    while (d < 0.0) d += two_pi;
    while (d >= two_pi) d -= two_pi;
    return d;
}

}  // namespace detail

/// Scans [0, Lambda] tracking the B continuous eigenphases of S(lambda);
/// every upward crossing of a multiple of 2*pi is refined by bisection to
/// width `tol.root`.  Phases move strictly forward, so each branch is
/// monotone and bisection is safe; branch identity is carried by
/// eigenvector overlap, with adaptive step halving near close encounters.
/// The trivial lambda = 0 solution is excluded.  Throws TrackingError when
/// continuation fails even at the minimal step, NumericalError when the
/// root count disagrees with the Weyl estimate by more than B.
inline MetricSpectrum secular_eigenvalues(const MetricGraph& graph, double lambda_max,
                                          const Eigen::MatrixXcd* observable = nullptr,
                                          const Tolerances& tol = {}) {
    if (lambda_max < 0.0) throw DomainError("lambda_max must be nonnegative");
    if (observable != nullptr &&
        (observable->rows() != graph.bonds() || observable->cols() != graph.bonds()))
        throw ContractError("observable dimension does not match the bond count");

    MetricSpectrum spectrum;
    spectrum.lambda_max = lambda_max;
    spectrum.mean_count = graph.mean_count(lambda_max);
    if (lambda_max == 0.0) return spectrum;

    const int n = graph.bonds();
    const double two_pi = 2.0 * std::numbers::pi;
    const double base_step =
        std::min(std::numbers::pi / (10.0 * graph.total_length()),
                 std::numbers::pi / (4.0 * graph.max_length()));
    const double min_step = base_step * 1e-9;

    double lambda = 0.0;
    detail::EigenSystem sys = detail::solve_eigen(graph.at(0.0));
    // unwrapped phases; the shift keeps an exact phase 0 at lambda = 0 from
    // registering as a root (the trivial origin)
    std::vector<double> phases(static_cast<std::size_t>(n));
    std::vector<std::int64_t> crossings(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        phases[static_cast<std::size_t>(k)] = detail::principal_arg(sys.values(k));
        crossings[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(
            std::floor((phases[static_cast<std::size_t>(k)] + 1e-9) / two_pi));
    }

    const auto weight_of = [&](const Eigen::VectorXcd& v) {
        double w = 0.0;
        for (int b = 0; b < n; ++b) w += graph.lengths()(b) * std::norm(v(b));
        return w;
    };

    // refine one crossing inside (lo, hi]; anchor carries branch identity
    const auto refine_root = [&](double lo, double hi, Eigen::VectorXcd anchor, int branch) {
        double glo = 0.0;  // principal arg at lo is <= 0 by construction
        (void)glo;
        while (hi - lo > tol.root) {
            const double mid = 0.5 * (lo + hi);
            const detail::EigenSystem mid_sys = detail::solve_eigen(graph.at(mid));
            int best = 0;
            double best_overlap = -1.0;
            for (int k = 0; k < n; ++k) {
                const double o = std::norm(anchor.dot(mid_sys.vectors.col(k)));
                if (o > best_overlap) {
                    best_overlap = o;
                    best = k;
                }
            }
            if (best_overlap < 0.5)
                throw TrackingError("lost the eigenphase branch while refining a root", lo, hi);
            const double g = detail::principal_arg(mid_sys.values(best));
            anchor = mid_sys.vectors.col(best);
            if (g > 0.0)
                hi = mid;
            else
                lo = mid;
        }
        const double root = 0.5 * (lo + hi);
        const detail::EigenSystem root_sys = detail::solve_eigen(graph.at(root));
        int best = 0;
        double best_overlap = -1.0;
        for (int k = 0; k < n; ++k) {
            const double o = std::norm(anchor.dot(root_sys.vectors.col(k)));
            if (o > best_overlap) {
                best_overlap = o;
                best = k;
            }
        }
        MetricRoot record;
        record.lambda = root;
        record.branch = branch + 1;
        record.vector = root_sys.vectors.col(best);
        record.weight = weight_of(record.vector);

        const double det_residual =
            std::abs((Eigen::MatrixXcd::Identity(n, n) - graph.at(root)).determinant());
        if (det_residual > 1e-6)
            throw NumericalError("secular determinant not small at a located root",
                                 det_residual);
        if (record.weight < graph.min_length() - 1e-8 ||
            record.weight > graph.max_length() + 1e-8)
            throw NumericalError("root weight <phi, L phi> escapes [L_min, L_max]",
                                 record.weight);
        if (observable != nullptr)
            record.matrix_element =
                std::real(record.vector.dot((*observable) * record.vector));
        spectrum.roots.push_back(std::move(record));
    };

    double step = base_step;
    while (lambda < lambda_max) {
        const double next = std::min(lambda + step, lambda_max);
        const detail::EigenSystem next_sys = detail::solve_eigen(graph.at(next));
        const auto assignment = detail::match_by_overlap(sys.vectors, next_sys.vectors);
        if (!assignment) {
            step *= 0.5;
            if (step < min_step)
                throw TrackingError("eigenvalue collision: continuation failed", lambda, next);
            continue;
        }

        for (int k = 0; k < n; ++k) {
            const int nk = (*assignment)[static_cast<std::size_t>(k)];
            const double advance =
                detail::phase_advance(sys.values(k), next_sys.values(nk));
            const double new_phase = phases[static_cast<std::size_t>(k)] + advance;
            const auto new_crossing =
                static_cast<std::int64_t>(std::floor((new_phase + 1e-9) / two_pi));
            for (std::int64_t r = crossings[static_cast<std::size_t>(k)] + 1;
                 r <= new_crossing; ++r)
                refine_root(lambda, next, sys.vectors.col(k), k);
            crossings[static_cast<std::size_t>(k)] = new_crossing;
            phases[static_cast<std::size_t>(k)] = new_phase;
        }

        // reorder the new system into the tracked branch order
        detail::EigenSystem ordered;
        ordered.values.resize(n);
        ordered.vectors.resize(n, n);
        for (int k = 0; k < n; ++k) {
            ordered.values(k) = next_sys.values((*assignment)[static_cast<std::size_t>(k)]);
            ordered.vectors.col(k) =
                next_sys.vectors.col((*assignment)[static_cast<std::size_t>(k)]);
        }
        sys = std::move(ordered);
        lambda = next;
        step = std::min(base_step, step * 2.0);
    }

    std::sort(spectrum.roots.begin(), spectrum.roots.end(),
              [](const MetricRoot& a, const MetricRoot& b) { return a.lambda < b.lambda; });

    const double miscount =
        std::abs(static_cast<double>(spectrum.count()) - spectrum.mean_count);
    if (miscount > static_cast<double>(n))
        throw NumericalError("root count deviates from the Weyl estimate by more than B",
                             miscount);
    return spectrum;
}

/// Spectral variances over the roots up to Lambda: the plain average of
/// squared matrix elements and the weight-compensated version.  Returns
/// (V_S, V_S_hat); the sandwich L_min * V_S_hat <= V_S <= L_max * V_S_hat
/// is asserted.
inline std::pair<double, double> variance_VS(const MetricGraph& graph,
                                             const Eigen::MatrixXcd& observable,
                                             double lambda_max,
                                             const MetricSpectrum* precomputed = nullptr,
                                             const Tolerances& tol = {}) {
    if (std::abs(observable.trace()) > 1e-12)
        throw ContractError("variance_VS expects a traceless observable");
    MetricSpectrum local;
    const MetricSpectrum* spectrum = precomputed;
    if (spectrum == nullptr) {
        local = secular_eigenvalues(graph, lambda_max, &observable, tol);
        spectrum = &local;
    }
    const double mean_count = graph.mean_count(lambda_max);
    double vs = 0.0, vs_hat = 0.0;
    for (const auto& root : spectrum->roots) {
        if (root.lambda > lambda_max) break;
        const double a2 = root.matrix_element * root.matrix_element;
        vs += a2;
        vs_hat += a2 / root.weight;
    }
    vs /= mean_count;
    vs_hat /= mean_count;
    const double slack = 1e-12 + 1e-9 * vs;
    if (graph.min_length() * vs_hat > vs + slack || vs > graph.max_length() * vs_hat + slack)
        throw NumericalError("length sandwich violated between V_S and V_S_hat", vs);
    return {vs, vs_hat};
}

/// Trapezoid average over lambda of V_U(S(lambda)) = B^-1 sum_k <psi_k|A|psi_k>^2.
/// Verifies sum_k <psi_k|A|psi_k> = Tr A = 0 at every node.
inline double variance_VU_avg(const MetricGraph& graph, const Eigen::MatrixXcd& observable,
                              double lambda_max, double grid_step = 0.0) {
    if (std::abs(observable.trace()) > 1e-12)
        throw ContractError("variance_VU_avg expects a traceless observable");
    if (lambda_max <= 0.0) throw DomainError("lambda_max must be positive");
    const int n = graph.bonds();
    if (grid_step <= 0.0) grid_step = std::numbers::pi / (10.0 * graph.total_length());
    const auto segments = static_cast<std::int64_t>(std::ceil(lambda_max / grid_step));
    const double h = lambda_max / static_cast<double>(segments);

    const auto vu_at = [&](double lambda) {
        const detail::EigenSystem sys = detail::solve_eigen(graph.at(lambda));
        double sum = 0.0, total = 0.0;
        for (int k = 0; k < n; ++k) {
            const double a =
                std::real(sys.vectors.col(k).dot(observable * sys.vectors.col(k)));
            total += a;
            sum += a * a;
        }
        if (std::abs(total) > 1e-10)
            throw NumericalError("sum of matrix elements deviates from Tr A = 0", total);
        return sum / static_cast<double>(n);
    };

    double integral = 0.5 * (vu_at(0.0) + vu_at(lambda_max));
    for (std::int64_t i = 1; i < segments; ++i) integral += vu_at(h * static_cast<double>(i));
    integral *= h;
    return integral / lambda_max;
}

/// One evaluation window of the spectral-vs-parametric variance comparison.
struct VarianceRelationPoint {
    double lambda_max = 0.0;
    double mean_count = 0.0;
    std::int64_t root_count = 0;
    double weighted_spectral = 0.0;      // Lbar * V_S_hat
    double weighted_spectral_alt = 0.0;  // Tr L * V_S_hat (alternative normalization)
    double vu_average = 0.0;
    double residual = 0.0;
    double residual_alt = 0.0;
};

struct VarianceRelationReport {
    std::vector<VarianceRelationPoint> trend;
    std::string matching_normalization;  // which normalization is closer at the last window
};

/// Compares the weight-compensated spectral variance with the
/// lambda-averaged V_U over growing windows.  The relation is heuristic:
/// this reports the residual trend rather than asserting an identity.  Both
/// candidate normalizations of the weighted average are reported.
inline VarianceRelationReport check_variance_relation(const MetricGraph& graph,
                                                      const Eigen::MatrixXcd& observable,
                                                      std::vector<double> lambda_windows,
                                                      const Tolerances& tol = {}) {
    if (lambda_windows.empty()) throw DomainError("need at least one lambda window");
    std::sort(lambda_windows.begin(), lambda_windows.end());
    const double lambda_max = lambda_windows.back();
    const MetricSpectrum spectrum =
        secular_eigenvalues(graph, lambda_max, &observable, tol);

    VarianceRelationReport report;
    for (const double window : lambda_windows) {
        VarianceRelationPoint point;
        point.lambda_max = window;
        point.mean_count = graph.mean_count(window);
        double vs_hat = 0.0;
        std::int64_t count = 0;
        for (const auto& root : spectrum.roots) {
            if (root.lambda > window) break;
            vs_hat += root.matrix_element * root.matrix_element / root.weight;
            ++count;
        }
        vs_hat /= point.mean_count;
        point.root_count = count;
        point.weighted_spectral = graph.mean_length() * vs_hat;
        point.weighted_spectral_alt = graph.total_length() * vs_hat;
        point.vu_average = variance_VU_avg(graph, observable, window);
        const double scale = std::max(std::abs(point.vu_average), 1e-300);
        point.residual = std::abs(point.weighted_spectral - point.vu_average) / scale;
        point.residual_alt =
            std::abs(point.weighted_spectral_alt - point.vu_average) / scale;
        report.trend.push_back(point);
    }
    const auto& last = report.trend.back();
    report.matching_normalization =
        last.residual <= last.residual_alt ? "mean_length" : "total_length";
    return report;
}

}  // namespace qgraph
