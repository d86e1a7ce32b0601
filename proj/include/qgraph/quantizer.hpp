#pragma once

#include "qgraph/errors.hpp"
#include "qgraph/rng.hpp"
#include "qgraph/stochastic_matrix.hpp"
#include "qgraph/tolerances.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace qgraph {

enum class PhaseScheme { fourier, user_supplied };

inline const char* to_string(PhaseScheme s) {
    return s == PhaseScheme::fourier ? "fourier" : "user_supplied";
}

/// Largest deviation of U^dag U from the identity.
inline double unitarity_residual(const Eigen::MatrixXcd& u) {
    const std::int64_t m = u.rows();
    return (u.adjoint() * u - Eigen::MatrixXcd::Identity(m, m)).cwiseAbs().maxCoeff();
}

/// Largest entrywise deviation of |U_jk|^2 from B_jk.
inline double moduli_residual(const Eigen::MatrixXcd& u, const StochasticMatrix& b) {
    if (u.rows() != b.size() || u.cols() != b.size())
        throw ContractError("moduli_residual: dimension mismatch");
    double worst = 0.0;
    std::vector<double> row_dense(static_cast<std::size_t>(b.size()), 0.0);
    for (std::int64_t j = 1; j <= b.size(); ++j) {
        for (const auto& [col, value] : b.row(j))
            row_dense[static_cast<std::size_t>(col - 1)] = to_double(value);
        for (std::int64_t k = 1; k <= b.size(); ++k) {
            const double diff = std::abs(std::norm(u(j - 1, k - 1)) -
                                         row_dense[static_cast<std::size_t>(k - 1)]);
            worst = std::max(worst, diff);
        }
        for (const auto& [col, value] : b.row(j))
            row_dense[static_cast<std::size_t>(col - 1)] = 0.0;
    }
    return worst;
}

/// Unitary quantization of B: a dense complex matrix with |U_jk|^2 = B_jk,
/// assembled block-by-block over the equivalence classes (each class is one
/// vertex of the graph; its block couples the class's rows to their shared
/// column support).  Immutable; residuals measured at construction.
class UnitaryPropagator {
  public:
    UnitaryPropagator(Eigen::MatrixXcd matrix, EquivalenceClasses classes, PhaseScheme scheme,
                      double unitarity, double moduli)
        : matrix_(std::move(matrix)),
          classes_(std::move(classes)),
          scheme_(scheme),
          unitarity_residual_(unitarity),
          moduli_residual_(moduli) {}

    std::int64_t size() const { return matrix_.rows(); }
    const Eigen::MatrixXcd& matrix() const { return matrix_; }
    const EquivalenceClasses& classes() const { return classes_; }
    PhaseScheme scheme() const { return scheme_; }
    double unitarity_residual() const { return unitarity_residual_; }
    double moduli_residual() const { return moduli_residual_; }

    /// Column indices of the nonzero entries in row j (1-based).
    std::vector<std::int64_t> row_support(std::int64_t j) const {
        std::vector<std::int64_t> cols;
        for (std::int64_t k = 1; k <= size(); ++k)
            if (matrix_(j - 1, k - 1) != std::complex<double>(0.0, 0.0)) cols.push_back(k);
        return cols;
    }

  private:
    Eigen::MatrixXcd matrix_;
    EquivalenceClasses classes_;
    PhaseScheme scheme_;
    double unitarity_residual_;
    double moduli_residual_;
};

/// Builds U with |U|^2 = B.  The fourier scheme fills each class block with
/// the discrete Fourier matrix exp(2*pi*i*a*b/s)/sqrt(s) (rows and columns
/// ordered by ascending atom index); it requires every class block to be
/// uniform with entries 1/s, which holds exactly when all slopes share one
/// magnitude.  Otherwise supply one unitary per class whose squared moduli
/// reproduce that class's block.
inline UnitaryPropagator quantize(const StochasticMatrix& b, const EquivalenceClasses& classes,
                                  PhaseScheme scheme,
                                  const std::vector<Eigen::MatrixXcd>* user_blocks = nullptr,
                                  const Tolerances& tol = {}) {
    const std::int64_t m = b.size();
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(m, m);

    for (std::size_t cid = 0; cid < classes.classes.size(); ++cid) {
        const auto& rows = classes.classes[cid];
        const auto& cols = classes.column_support[cid];
        const auto s = static_cast<std::int64_t>(rows.size());
        if (static_cast<std::int64_t>(cols.size()) != s)
            throw UnistochasticError("class " + std::to_string(cid + 1) +
                                     " has a non-square block (" + std::to_string(rows.size()) +
                                     " rows, " + std::to_string(cols.size()) + " columns)");

        if (scheme == PhaseScheme::fourier) {
            if (!classes.uniform_block[cid])
                throw UnistochasticError(
                    "class " + std::to_string(cid + 1) +
                    " does not have uniform entries 1/s; the Fourier scheme only quantizes "
                    "equal-slope blocks (supply per-class unitaries instead)");
            const double norm = 1.0 / std::sqrt(static_cast<double>(s));
            for (std::int64_t a = 0; a < s; ++a)
                for (std::int64_t c = 0; c < s; ++c) {
                    const double angle = 2.0 * std::numbers::pi * static_cast<double>(a * c) /
                                         static_cast<double>(s);
                    u(rows[static_cast<std::size_t>(a)] - 1,
                      cols[static_cast<std::size_t>(c)] - 1) =
                        std::polar(norm, angle);
                }
        } else {
            if (user_blocks == nullptr)
                throw ContractError("user_supplied scheme needs one unitary block per class");
            if (user_blocks->size() != classes.classes.size())
                throw ContractError("expected " + std::to_string(classes.classes.size()) +
                                    " user blocks, got " + std::to_string(user_blocks->size()));
            const Eigen::MatrixXcd& w = (*user_blocks)[cid];
            if (w.rows() != s || w.cols() != s)
                throw ContractError("user block for class " + std::to_string(cid + 1) +
                                    " has the wrong dimensions");
            for (std::int64_t a = 0; a < s; ++a)
                for (std::int64_t c = 0; c < s; ++c) {
                    const double want =
                        to_double(b.entry(rows[static_cast<std::size_t>(a)],
                                          cols[static_cast<std::size_t>(c)]));
                    if (std::abs(std::norm(w(a, c)) - want) > tol.moduli)
                        throw UnistochasticError(
                            "user block for class " + std::to_string(cid + 1) +
                            " does not reproduce the squared moduli of B");
                    u(rows[static_cast<std::size_t>(a)] - 1,
                      cols[static_cast<std::size_t>(c)] - 1) = w(a, c);
                }
        }
    }

    const double unit = unitarity_residual(u);
    if (unit > tol.unitarity)
        throw NumericalError("assembled propagator is not unitary to tolerance (residual " +
                                 std::to_string(unit) + ")",
                             unit);
    const double mod = moduli_residual(u, b);
    if (mod > tol.moduli)
        throw NumericalError("assembled propagator violates |U|^2 = B (residual " +
                                 std::to_string(mod) + ")",
                             mod);
    return UnitaryPropagator(std::move(u), classes, scheme, unit, mod);
}

/// Members D_m * U with D_m diagonal and phases i.i.d. uniform on [0, 2*pi),
/// one independent stream per member derived from (seed, member index).
/// `zero_phase_hook` forces all phases to zero (then D = I exactly).
inline std::vector<UnitaryPropagator> random_phase_ensemble(const UnitaryPropagator& u,
                                                            std::uint64_t seed, int count,
                                                            bool zero_phase_hook = false,
                                                            const Tolerances& tol = {}) {
    if (count < 1) throw DomainError("ensemble count must be >= 1");
    std::vector<UnitaryPropagator> members;
    members.reserve(static_cast<std::size_t>(count));
    const std::int64_t m = u.size();
    for (int member = 1; member <= count; ++member) {
        RandomStream stream(seed, static_cast<std::uint64_t>(member));
        Eigen::VectorXcd phases(m);
        double phase_norm_defect = 0.0;
        for (std::int64_t j = 0; j < m; ++j) {
            const double theta = zero_phase_hook ? 0.0 : stream.phase();
            phases(j) = std::polar(1.0, theta);
            phase_norm_defect =
                std::max(phase_norm_defect, std::abs(std::norm(phases(j)) - 1.0));
        }
        Eigen::MatrixXcd du = phases.asDiagonal() * u.matrix();
        const double unit = unitarity_residual(du);
        if (unit > tol.unitarity)
            throw NumericalError("ensemble member lost unitarity (residual " +
                                     std::to_string(unit) + ")",
                                 unit);
        // |DU|^2 deviates from |U|^2 by at most the phase modulus defect
        members.emplace_back(std::move(du), u.classes(), u.scheme(), unit,
                             u.moduli_residual() + phase_norm_defect);
    }
    return members;
}

}  // namespace qgraph
